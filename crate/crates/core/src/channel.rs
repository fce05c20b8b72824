//! Network snapshots: communication and two-round sensing power gains.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use crate::config::{ChannelMode, GeometryParams, ScenarioConfig};
use crate::error::{Error, Result};
use crate::rng::{self, Domain};

/// `10^(x/10)`.
#[inline]
pub fn db_to_linear(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

/// Power gains of one network snapshot.
///
/// `rho[l][i]` is the gain from BS `l` to user `i`; `g[l][i]` is the
/// two-round gain BS `l` -> target `i` -> BS `i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelRealization {
    pub rho: Vec<Vec<f64>>,
    pub g: Vec<Vec<f64>>,
    pub sigma_c2: Vec<f64>,
    pub sigma_s2: Vec<f64>,
}

impl ChannelRealization {
    pub fn new(rho: Vec<Vec<f64>>, g: Vec<Vec<f64>>, sigma_c2: Vec<f64>, sigma_s2: Vec<f64>) -> Result<Self> {
        let cells = rho.len();
        let square = |m: &Vec<Vec<f64>>| m.len() == cells && m.iter().all(|r| r.len() == cells);
        if cells == 0 || !square(&rho) || !square(&g) {
            return Err(Error::domain(
                "ChannelRealization::new",
                "gain matrices must be L×L with L >= 1",
            ));
        }
        if sigma_c2.len() != cells || sigma_s2.len() != cells {
            return Err(Error::domain(
                "ChannelRealization::new",
                "noise vectors must have length L",
            ));
        }
        let ok_gain = |v: &f64| v.is_finite() && *v >= 0.0;
        if !rho.iter().chain(g.iter()).flatten().all(ok_gain) {
            return Err(Error::domain(
                "ChannelRealization::new",
                "gains must be finite and nonnegative",
            ));
        }
        if !sigma_c2
            .iter()
            .chain(sigma_s2.iter())
            .all(|v| v.is_finite() && *v > 0.0)
        {
            return Err(Error::domain(
                "ChannelRealization::new",
                "noise powers must be finite and positive",
            ));
        }
        Ok(ChannelRealization {
            rho,
            g,
            sigma_c2,
            sigma_s2,
        })
    }

    #[inline]
    pub fn cells(&self) -> usize {
        self.rho.len()
    }

    /// Sensing gains seen by target `i`, indexed by transmitting BS.
    pub fn sensing_column(&self, i: usize) -> Vec<f64> {
        self.g.iter().map(|row| row[i]).collect()
    }

    /// Multiply every gain and noise power by `c`.
    pub fn scaled(&self, c: f64) -> ChannelRealization {
        let scale = |m: &Vec<Vec<f64>>| m.iter().map(|r| r.iter().map(|v| v * c).collect()).collect();
        ChannelRealization {
            rho: scale(&self.rho),
            g: scale(&self.g),
            sigma_c2: self.sigma_c2.iter().map(|v| v * c).collect(),
            sigma_s2: self.sigma_s2.iter().map(|v| v * c).collect(),
        }
    }
}

/// BS, user and target positions for the geometry channel mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Layout {
    pub base_stations: Vec<[f64; 2]>,
    pub users: Vec<[f64; 2]>,
    pub targets: Vec<[f64; 2]>,
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn uniform_in_disc<R: Rng + ?Sized>(center: [f64; 2], radius: f64, rng: &mut R) -> [f64; 2] {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = std::f64::consts::TAU * rng.random::<f64>();
    [center[0] + r * theta.cos(), center[1] + r * theta.sin()]
}

/// BSs sit on a ring with adjacent spacing `inter_site_distance`; each
/// user and target is uniform in the disc of radius `radius` around its BS.
pub fn sample_layout<R: Rng + ?Sized>(cells: usize, params: &GeometryParams, rng: &mut R) -> Layout {
    let base_stations: Vec<[f64; 2]> = if cells == 1 {
        vec![[0.0, 0.0]]
    } else {
        let step = std::f64::consts::TAU / cells as f64;
        let ring = params.inter_site_distance / (2.0 * (step / 2.0).sin());
        (0..cells)
            .map(|l| [ring * (step * l as f64).cos(), ring * (step * l as f64).sin()])
            .collect()
    };
    let users = base_stations
        .iter()
        .map(|&bs| uniform_in_disc(bs, params.radius, rng))
        .collect();
    let targets = base_stations
        .iter()
        .map(|&bs| uniform_in_disc(bs, params.radius, rng))
        .collect();
    Layout {
        base_stations,
        users,
        targets,
    }
}

/// Mean gains implied by a layout: `d^-α` for communication links and
/// `d(B_l,T_i)^-α · d(T_i,B_i)^-α · rcs` for two-round sensing links.
pub fn layout_mean_gains(layout: &Layout, params: &GeometryParams) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let cells = layout.base_stations.len();
    let loss = |d: f64| d.max(params.min_distance).powf(-params.pathloss_exponent);
    let mut rho = vec![vec![0.0; cells]; cells];
    let mut g = vec![vec![0.0; cells]; cells];
    for l in 0..cells {
        for i in 0..cells {
            let bs = layout.base_stations[l];
            rho[l][i] = loss(distance(bs, layout.users[i]));
            let echo = loss(distance(layout.targets[i], layout.base_stations[i]));
            g[l][i] = loss(distance(bs, layout.targets[i])) * echo * params.rcs;
        }
    }
    (rho, g)
}

fn faded<R: Rng + ?Sized>(mean: &[Vec<f64>], fading: bool, rng: &mut R) -> Vec<Vec<f64>> {
    mean.iter()
        .map(|row| {
            row.iter()
                .map(|&m| {
                    if fading {
                        let e: f64 = Exp1.sample(rng);
                        m * e
                    } else {
                        m
                    }
                })
                .collect()
        })
        .collect()
}

/// Draw one snapshot. Rayleigh fading makes every power gain exponential
/// around its mean.
pub fn sample_channels<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Result<ChannelRealization> {
    let (rho, g) = match &config.channel_mode {
        ChannelMode::Direct(direct) => {
            let rho = faded(&direct.mean_rho, direct.fading, rng);
            let g = faded(&direct.mean_g, direct.fading, rng);
            (rho, g)
        }
        ChannelMode::Geometry(params) => {
            let layout = sample_layout(config.cells, params, rng);
            let (mean_rho, mean_g) = layout_mean_gains(&layout, params);
            (faded(&mean_rho, params.fading, rng), faded(&mean_g, params.fading, rng))
        }
    };
    ChannelRealization::new(rho, g, config.sigma_c2(), config.sigma_s2())
}

/// Snapshot number `index` of the scenario, drawn from its own substream.
pub fn snapshot(config: &ScenarioConfig, index: u64) -> Result<ChannelRealization> {
    let mut stream = rng::substream(config.seed, Domain::Channel, index);
    sample_channels(config, &mut stream)
}

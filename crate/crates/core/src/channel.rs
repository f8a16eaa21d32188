//! Cell geometry, path loss with log-normal shadowing, and block-fading
//! Rayleigh channel synthesis.
//!
//! Every random draw comes from a ChaCha8 stream selected by
//! `(seed, stream tag)` and positioned by word offset, so a channel entry is a
//! pure function of `(seed, slice or sample index, user, antenna)`. Complex
//! normals use the polar Box-Muller transform on two 53-bit uniforms.

use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};

const STREAM_HORIZON: u64 = 1;
const STREAM_FUTURE: u64 = 2;
const STREAM_PLACEMENT: u64 = 3;
const STREAM_SHADOW: u64 = 4;

/// Total rejection-sampling budget of one placement call.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

/// Geometry and propagation parameters. Distances in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioParams {
    /// Distance between adjacent hexagon corners (equal to the circumradius).
    pub corner_distance: f64,
    pub reference_distance: f64,
    pub pathloss_exponent: f64,
    pub shadow_std_db: f64,
    pub min_user_distance: f64,
    /// Draw new user positions for every Monte Carlo trial.
    pub redraw_positions: bool,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            corner_distance: 1000.0,
            reference_distance: 200.0,
            pathloss_exponent: 3.7,
            shadow_std_db: 8.0,
            min_user_distance: 50.0,
            redraw_positions: true,
        }
    }
}

/// Users placed in a hexagonal cell with the base station at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: ScenarioParams,
    pub bs_position: [f64; 2],
    pub user_positions: Vec<[f64; 2]>,
    /// Linear shadowing factors, one per user.
    pub shadowing: Vec<f64>,
}

impl Scenario {
    pub fn num_users(&self) -> usize {
        self.user_positions.len()
    }

    pub fn distance(&self, m: usize) -> f64 {
        let [x, y] = self.user_positions[m];
        let [bx, by] = self.bs_position;
        (x - bx).hypot(y - by)
    }

    /// Per-user channel variances; fixed over the horizon since users are static.
    pub fn variances(&self) -> Vec<f64> {
        (0..self.num_users())
            .map(|m| {
                variance_law(
                    self.distance(m),
                    self.shadowing[m],
                    self.params.reference_distance,
                    self.params.pathloss_exponent,
                )
            })
            .collect()
    }
}

/// Channel realisations over a horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// `H(t)`, N x M, column m is `h_m(t)`.
    pub h: Vec<CMatrix>,
    pub variances: Vec<f64>,
    pub shadowing: Vec<f64>,
    pub seed: u64,
}

impl ChannelSet {
    pub fn num_slices(&self) -> usize {
        self.h.len()
    }

    /// Borrows a copy restricted to one slice (used by per-slice solvers).
    pub fn slice(&self, t: usize) -> &CMatrix {
        &self.h[t]
    }
}

/// Block stride between the future samples of consecutive online slices.
pub const FUTURE_STRIDE: usize = 1 << 12;

fn stream(seed: u64, tag: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tag);
    rng
}

fn unit_open(rng: &mut ChaCha8Rng) -> f64 {
    // (0, 1]
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn unit_closed_open(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Word offset of entry `(block, user, antenna)`; each entry consumes 4 words.
fn word_pos(block: usize, user: usize, antenna: usize) -> u128 {
    debug_assert!(user < (1 << 20) && antenna < (1 << 10));
    ((((block as u128) << 20) + user as u128) << 10 | antenna as u128) * 4
}

/// Fills an N x M matrix with `CN(0, variances[m])` entries for one block
/// (a horizon slice or a future sample) of the given stream.
fn gaussian_block(seed: u64, tag: u64, block: usize, variances: &[f64], n: usize) -> CMatrix {
    let mut rng = stream(seed, tag);
    let mut h = CMatrix::zeros(n, variances.len());
    for (m, &var) in variances.iter().enumerate() {
        rng.set_word_pos(word_pos(block, m, 0));
        for k in 0..n {
            let u1 = unit_open(&mut rng);
            let u2 = unit_closed_open(&mut rng);
            let r = (-var * u1.ln()).sqrt();
            let th = 2.0 * PI * u2;
            h[(k, m)] = c(r * th.cos(), r * th.sin());
        }
    }
    h
}

/// Regular hexagon with corners on the x axis at distance `r` from the origin.
pub fn in_hexagon(p: [f64; 2], r: f64) -> bool {
    let s3 = 3f64.sqrt();
    let (x, y) = (p[0].abs(), p[1].abs());
    y <= 0.5 * s3 * r && s3 * x + y <= s3 * r
}

/// Uniform point in the hexagon bounding box `[-r, r] x [-sqrt(3) r/2, sqrt(3) r/2]`.
pub fn sample_bounding_box<R: Rng>(rng: &mut R, r: f64) -> [f64; 2] {
    let h = 0.5 * 3f64.sqrt() * r;
    [r * (2.0 * rng.random::<f64>() - 1.0), h * (2.0 * rng.random::<f64>() - 1.0)]
}

/// Places `num_users` users uniformly in the cell and draws their shadowing.
pub fn place_users(params: &ScenarioParams, num_users: usize, seed: u64) -> Result<Scenario> {
    if num_users == 0 {
        return Err(Error::Config("at least one user is required".into()));
    }
    if !(params.corner_distance > 0.0) || params.min_user_distance < 0.0 {
        return Err(Error::Config("invalid cell geometry".into()));
    }
    let mut rng = stream(seed, STREAM_PLACEMENT);
    let r = params.corner_distance;
    let mut attempts = 0usize;
    let mut users = Vec::with_capacity(num_users);
    while users.len() < num_users {
        attempts += 1;
        if attempts > MAX_PLACEMENT_ATTEMPTS {
            return Err(Error::Config(format!(
                "placed only {} of {num_users} users after {MAX_PLACEMENT_ATTEMPTS} attempts; \
                 min_user_distance {} is too large for corner distance {r}",
                users.len(),
                params.min_user_distance
            )));
        }
        let p = sample_bounding_box(&mut rng, r);
        if in_hexagon(p, r) && p[0].hypot(p[1]) >= params.min_user_distance.max(f64::MIN_POSITIVE) {
            users.push(p);
        }
    }
    let shadowing = draw_shadowing(num_users, params.shadow_std_db, seed);
    Ok(Scenario {
        params: params.clone(),
        bs_position: [0.0, 0.0],
        user_positions: users,
        shadowing,
    })
}

/// Linear shadowing factors with `10 log10(rho) ~ N(0, std_db^2)`.
pub fn draw_shadowing(num_users: usize, std_db: f64, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed, STREAM_SHADOW);
    let normal = Normal::new(0.0, std_db).expect("finite shadowing std");
    (0..num_users)
        .map(|_| 10f64.powf(normal.sample(&mut rng) / 10.0))
        .collect()
}

/// `rho * (reference / distance)^exponent`.
pub fn variance_law(distance: f64, shadow: f64, reference: f64, exponent: f64) -> f64 {
    shadow * (reference / distance).powf(exponent)
}

/// Channel variance under the default path-loss law (200 m reference, exponent 3.7).
pub fn channel_variance(distance_m: f64, shadow_linear: f64) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::InvalidArgument(format!("distance must be positive, got {distance_m}")));
    }
    if !(shadow_linear > 0.0) {
        return Err(Error::InvalidArgument("shadowing factor must be positive".into()));
    }
    Ok(variance_law(distance_m, shadow_linear, 200.0, 3.7))
}

/// `T` independent slices of N-antenna channels for static users.
pub fn sample_horizon(scenario: &Scenario, num_antennas: usize, num_slices: usize, seed: u64) -> ChannelSet {
    let variances = scenario.variances();
    let h = (0..num_slices)
        .map(|t| gaussian_block(seed, STREAM_HORIZON, t, &variances, num_antennas))
        .collect();
    ChannelSet {
        h,
        variances,
        shadowing: scenario.shadowing.clone(),
        seed,
    }
}

/// `J` i.i.d. channel samples from the known per-user distribution. Uses a
/// stream distinct from [`sample_horizon`].
pub fn sample_future(variances: &[f64], num_antennas: usize, num_samples: usize, seed: u64) -> Vec<CMatrix> {
    sample_future_slice(variances, num_antennas, num_samples, seed, 0)
}

/// Future samples drawn at online slice `slice`. Sample `j` of a slice is the
/// same for every `J > j`, so runs with different `J` share their draws.
pub fn sample_future_slice(
    variances: &[f64],
    num_antennas: usize,
    num_samples: usize,
    seed: u64,
    slice: usize,
) -> Vec<CMatrix> {
    assert!(num_samples <= FUTURE_STRIDE, "at most {FUTURE_STRIDE} future samples per slice");
    (0..num_samples)
        .map(|j| gaussian_block(seed, STREAM_FUTURE, slice * FUTURE_STRIDE + j, variances, num_antennas))
        .collect()
}

/// Writes channels as CSV rows `t,m,antenna,re,im` (shortest round-trip floats).
pub fn write_channels_csv(h: &[CMatrix], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let mut body = String::from("t,m,antenna,re,im\n");
    for (t, ht) in h.iter().enumerate() {
        for m in 0..ht.ncols() {
            for k in 0..ht.nrows() {
                let z = ht[(k, m)];
                body.push_str(&format!("{t},{m},{k},{:?},{:?}\n", z.re, z.im));
            }
        }
    }
    out.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_channels_csv(path: &Path) -> Result<Vec<CMatrix>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if i == 0 || line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let bad = || Error::InvalidArgument(format!("{}: malformed row {}", path.display(), i + 1));
        if f.len() != 5 {
            return Err(bad());
        }
        let idx: Vec<usize> = f[..3].iter().map(|s| s.parse().map_err(|_| bad())).collect::<Result<_>>()?;
        let re: f64 = f[3].parse().map_err(|_| bad())?;
        let im: f64 = f[4].parse().map_err(|_| bad())?;
        rows.push((idx[0], idx[1], idx[2], c(re, im)));
    }
    let dim = |k: fn(&(usize, usize, usize, crate::C64)) -> usize| rows.iter().map(k).max().map_or(0, |x| x + 1);
    let (t, m, n) = (dim(|r| r.0), dim(|r| r.1), dim(|r| r.2));
    let mut h = vec![CMatrix::zeros(n, m); t];
    for (tt, mm, kk, z) in rows {
        h[tt][(kk, mm)] = z;
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn placement_is_deterministic_and_inside() {
        let p = ScenarioParams::default();
        let a = place_users(&p, 10, 42).unwrap();
        let b = place_users(&p, 10, 42).unwrap();
        assert_eq!(a, b);
        for (m, u) in a.user_positions.iter().enumerate() {
            assert!(in_hexagon(*u, 1000.0));
            assert!(a.distance(m) >= 50.0);
        }
        assert_ne!(a, place_users(&p, 10, 43).unwrap());
    }

    #[test]
    fn placement_fails_when_cell_too_small() {
        let p = ScenarioParams {
            corner_distance: 10.0,
            min_user_distance: 9.9,
            ..Default::default()
        };
        let err = place_users(&p, 10, 1).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn variance_law_values() {
        assert_relative_eq!(channel_variance(200.0, 1.0).unwrap(), 1.0);
        assert_relative_eq!(channel_variance(400.0, 1.0).unwrap(), 2f64.powf(-3.7), max_relative = 1e-12);
        assert_relative_eq!(2f64.powf(-3.7), 0.07695, epsilon = 1e-5);
        assert!(channel_variance(0.0, 1.0).is_err());
        assert!(channel_variance(10.0, -1.0).is_err());
    }

    #[test]
    fn horizon_is_reproducible_and_static() {
        let s = place_users(&ScenarioParams::default(), 4, 9).unwrap();
        let a = sample_horizon(&s, 3, 5, 77);
        let b = sample_horizon(&s, 3, 5, 77);
        assert_eq!(a, b);
        assert_eq!(a.variances, s.variances());
        assert_ne!(a.h[0], a.h[1]);
    }

    #[test]
    fn entries_are_keyed_by_index_not_dimensions() {
        // slice 2, user 1, antenna 0 is the same whether we draw 3 or 5 slices
        let var = [1.0, 2.0];
        let a = gaussian_block(5, STREAM_HORIZON, 2, &var, 2);
        let b = gaussian_block(5, STREAM_HORIZON, 2, &var, 4);
        assert_eq!(a[(0, 1)], b[(0, 1)]);
        assert_eq!(a[(1, 0)], b[(1, 0)]);
    }

    #[test]
    fn future_stream_is_separate() {
        let var = vec![1.0; 3];
        let s = Scenario {
            params: ScenarioParams::default(),
            bs_position: [0.0, 0.0],
            user_positions: vec![[200.0, 0.0]; 3],
            shadowing: vec![1.0; 3],
        };
        let hz = sample_horizon(&s, 2, 1, 123);
        let fut = sample_future(&var, 2, 1, 123);
        assert_ne!(hz.h[0], fut[0]);
        assert_eq!(fut, sample_future(&var, 2, 1, 123));
        let two = sample_future(&var, 2, 2, 123);
        assert_eq!(two[0], fut[0]);
    }

    #[test]
    fn csv_round_trip() {
        let s = place_users(&ScenarioParams::default(), 3, 1).unwrap();
        let set = sample_horizon(&s, 2, 4, 2);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.csv");
        write_channels_csv(&set.h, &p).unwrap();
        assert_eq!(read_channels_csv(&p).unwrap(), set.h);
    }
}

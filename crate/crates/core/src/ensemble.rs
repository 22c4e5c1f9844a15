//! Frozen atomic position configurations.
//!
//! Positions are sampled per atom from a ChaCha stream keyed by
//! `(seed, atom index)`, so an ensemble is reproducible bit for bit no matter
//! how the sampling is scheduled across threads.

use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::{Error, Result};

const UM_TO_CM: f64 = 1e-4;

/// Physical scale used to convert micrometre lengths into `k_eg * r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalUnits {
    wavelength_m: f64,
    gamma_per_s: Option<f64>,
}

impl PhysicalUnits {
    pub fn new(wavelength_m: f64) -> Result<Self> {
        if !(wavelength_m.is_finite() && wavelength_m > 0.0) {
            return Err(Error::invalid(format!("wavelength must be positive, got {wavelength_m}")));
        }
        Ok(Self { wavelength_m, gamma_per_s: None })
    }

    pub fn from_nm(wavelength_nm: f64) -> Result<Self> {
        Self::new(wavelength_nm * 1e-9)
    }

    pub fn with_gamma(mut self, gamma_per_s: f64) -> Self {
        self.gamma_per_s = Some(gamma_per_s);
        self
    }

    pub fn wavelength_m(&self) -> f64 {
        self.wavelength_m
    }

    pub fn wavelength_nm(&self) -> f64 {
        self.wavelength_m * 1e9
    }

    pub fn gamma_per_s(&self) -> Option<f64> {
        self.gamma_per_s
    }

    /// Transition wavenumber `k_eg = 2π/λ` in rad/m.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength_m
    }

    /// Converts a length in micrometres into units of `1/k_eg`.
    pub fn um_to_dimensionless(&self, um: f64) -> f64 {
        um * 1e-6 * self.wavenumber()
    }
}

impl Default for PhysicalUnits {
    /// 780 nm.
    fn default() -> Self {
        Self { wavelength_m: 780e-9, gamma_per_s: None }
    }
}

/// Cloud shape; sizes in micrometres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry {
    Cube { side_um: f64 },
    Sphere { radius_um: f64 },
    Gaussian { sigma_um: f64 },
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        let size = match *self {
            Geometry::Cube { side_um } => side_um,
            Geometry::Sphere { radius_um } => radius_um,
            Geometry::Gaussian { sigma_um } => sigma_um,
        };
        if size.is_finite() && size > 0.0 {
            Ok(())
        } else {
            Err(Error::invalid(format!("geometry size must be positive, got {size}")))
        }
    }

    /// Effective volume in cm³; `(2π)^{3/2} σ³` for the Gaussian cloud.
    pub fn volume_cm3(&self) -> f64 {
        match *self {
            Geometry::Cube { side_um } => (side_um * UM_TO_CM).powi(3),
            Geometry::Sphere { radius_um } => 4.0 / 3.0 * PI * (radius_um * UM_TO_CM).powi(3),
            Geometry::Gaussian { sigma_um } => (2.0 * PI).powf(1.5) * (sigma_um * UM_TO_CM).powi(3),
        }
    }

    /// Containment predicate on dimensionless coordinates. Gaussian clouds
    /// are unbounded.
    pub fn contains(&self, p: &Vector3<f64>, units: &PhysicalUnits) -> bool {
        match *self {
            Geometry::Cube { side_um } => {
                let half = 0.5 * units.um_to_dimensionless(side_um);
                p.iter().all(|c| c.abs() <= half)
            }
            Geometry::Sphere { radius_um } => {
                let r = units.um_to_dimensionless(radius_um);
                p.norm_squared() <= r * r
            }
            Geometry::Gaussian { .. } => p.iter().all(|c| c.is_finite()),
        }
    }

    /// Parses the descriptor written by `Display`, e.g. `sphere:radius_um=10`.
    pub fn parse(desc: &str) -> Result<Self> {
        let err = || Error::invalid(format!("bad geometry descriptor `{desc}`"));
        let (kind, param) = desc.split_once(':').ok_or_else(err)?;
        let (key, value) = param.split_once('=').ok_or_else(err)?;
        let value: f64 = value.parse().map_err(|_| err())?;
        let g = match (kind, key) {
            ("cube", "side_um") => Geometry::Cube { side_um: value },
            ("sphere", "radius_um") => Geometry::Sphere { radius_um: value },
            ("gaussian", "sigma_um") => Geometry::Gaussian { sigma_um: value },
            _ => return Err(err()),
        };
        g.validate()?;
        Ok(g)
    }

    fn sample(&self, units: &PhysicalUnits, rng: &mut ChaCha8Rng) -> Vector3<f64> {
        match *self {
            Geometry::Cube { side_um } => {
                let s = units.um_to_dimensionless(side_um);
                loop {
                    let p = Vector3::from_fn(|_, _| (rng.random::<f64>() - 0.5) * s);
                    if self.contains(&p, units) {
                        return p;
                    }
                }
            }
            Geometry::Sphere { radius_um } => {
                let r = units.um_to_dimensionless(radius_um);
                loop {
                    let p = Vector3::from_fn(|_, _| (2.0 * rng.random::<f64>() - 1.0) * r);
                    if self.contains(&p, units) {
                        return p;
                    }
                }
            }
            Geometry::Gaussian { sigma_um } => {
                let s = units.um_to_dimensionless(sigma_um);
                Vector3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal) * s)
            }
        }
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Geometry::Cube { side_um } => write!(f, "cube:side_um={side_um}"),
            Geometry::Sphere { radius_um } => write!(f, "sphere:radius_um={radius_um}"),
            Geometry::Gaussian { sigma_um } => write!(f, "gaussian:sigma_um={sigma_um}"),
        }
    }
}

/// Either an explicit atom number or a number density in cm⁻³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AtomCount {
    Count(usize),
    Density(f64),
}

impl AtomCount {
    pub fn resolve(&self, geometry: &Geometry) -> Result<usize> {
        match *self {
            AtomCount::Count(0) => Err(Error::EmptyEnsemble),
            AtomCount::Count(n) => Ok(n),
            AtomCount::Density(rho) => {
                if !(rho.is_finite() && rho > 0.0) {
                    return Err(Error::invalid(format!("density must be positive, got {rho}")));
                }
                let n = (rho * geometry.volume_cm3()).round();
                if n < 1.0 {
                    Err(Error::EmptyEnsemble)
                } else {
                    Ok(n as usize)
                }
            }
        }
    }
}

/// A 3-vector in units of `k_eg`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveVector(pub Vector3<f64>);

impl WaveVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let v = Vector3::new(x, y, z);
        if v.iter().all(|c| c.is_finite()) {
            Ok(Self(v))
        } else {
            Err(Error::invalid("wave vector components must be finite"))
        }
    }

    /// Unit-magnitude wave vector along `z`, the default phase-matched direction.
    pub fn along_z() -> Self {
        Self(Vector3::z())
    }

    pub fn magnitude(&self) -> f64 {
        self.0.norm()
    }

    pub fn as_vector(&self) -> &Vector3<f64> {
        &self.0
    }
}

impl From<Vector3<f64>> for WaveVector {
    fn from(v: Vector3<f64>) -> Self {
        Self(v)
    }
}

/// N frozen atoms, positions in units of `1/k_eg`.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicEnsemble {
    positions: Vec<Vector3<f64>>,
    geometry: Option<Geometry>,
    seed: u64,
    units: PhysicalUnits,
    density_per_cm3: Option<f64>,
}

/// One unordered atom pair with `mu < nu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSeparation {
    pub mu: usize,
    pub nu: usize,
    /// `r_mu - r_nu`, dimensionless.
    pub vector: Vector3<f64>,
    pub distance: f64,
}

impl PairSeparation {
    pub fn is_coincident(&self) -> bool {
        self.distance == 0.0
    }
}

impl AtomicEnsemble {
    pub fn generate(geometry: Geometry, count: AtomCount, seed: u64, units: PhysicalUnits) -> Result<Self> {
        geometry.validate()?;
        let n = count.resolve(&geometry)?;
        let positions: Vec<Vector3<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                geometry.sample(&units, &mut rng)
            })
            .collect();
        let density = match count {
            AtomCount::Density(rho) => rho,
            AtomCount::Count(_) => n as f64 / geometry.volume_cm3(),
        };
        Ok(Self { positions, geometry: Some(geometry), seed, units, density_per_cm3: Some(density) })
    }

    /// Ensemble from explicit dimensionless positions (no sampling geometry).
    pub fn from_positions(positions: Vec<Vector3<f64>>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        if positions.iter().any(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::invalid("positions must be finite"));
        }
        Ok(Self {
            positions,
            geometry: None,
            seed: 0,
            units: PhysicalUnits::default(),
            density_per_cm3: None,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    pub fn geometry(&self) -> Option<&Geometry> {
        self.geometry.as_ref()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn units(&self) -> &PhysicalUnits {
        &self.units
    }

    pub fn density_per_cm3(&self) -> Option<f64> {
        self.density_per_cm3
    }

    /// All `N(N-1)/2` unordered pairs. Coincident pairs are kept and logged.
    pub fn pair_separations(&self) -> Vec<PairSeparation> {
        let n = self.len();
        let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for mu in 0..n {
            for nu in mu + 1..n {
                let vector = self.positions[mu] - self.positions[nu];
                let pair = PairSeparation { mu, nu, vector, distance: vector.norm() };
                if pair.is_coincident() {
                    log::warn!("atoms {mu} and {nu} coincide");
                }
                out.push(pair);
            }
        }
        out
    }

    /// Applies `map` to every position, keeping the metadata.
    pub fn map_positions(&self, map: impl Fn(&Vector3<f64>) -> Vector3<f64>) -> Self {
        Self { positions: self.positions.iter().map(map).collect(), ..self.clone() }
    }

    fn header(&self) -> String {
        let geometry = self.geometry.map_or_else(|| "explicit".to_string(), |g| g.to_string());
        format!(
            "# ensemble v1 N={} seed={} geometry={} wavelength_nm={}",
            self.len(),
            self.seed,
            geometry,
            self.units.wavelength_nm()
        )
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.header())?;
        for p in &self.positions {
            writeln!(w, "{:.16e} {:.16e} {:.16e}", p.x, p.y, p.z)?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| parse_err(1, "missing header"))??;
        let mut tokens = header.split_whitespace();
        if tokens.next() != Some("#") || tokens.next() != Some("ensemble") || tokens.next() != Some("v1") {
            return Err(parse_err(1, "expected `# ensemble v1`"));
        }
        let (mut n, mut seed, mut geometry, mut wavelength) = (None, None, None, None);
        for tok in tokens {
            let (key, value) = tok.split_once('=').ok_or_else(|| parse_err(1, format!("bad token `{tok}`")))?;
            let bad = |_| parse_err(1, format!("bad value for `{key}`"));
            match key {
                "N" => n = Some(value.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "seed" => seed = Some(value.parse::<u64>().map_err(|e| bad(e.to_string()))?),
                "geometry" => {
                    geometry = Some(if value == "explicit" {
                        None
                    } else {
                        Some(Geometry::parse(value).map_err(|e| parse_err(1, e.to_string()))?)
                    })
                }
                "wavelength_nm" => wavelength = Some(value.parse::<f64>().map_err(|e| bad(e.to_string()))?),
                _ => return Err(parse_err(1, format!("unknown key `{key}`"))),
            }
        }
        let n = n.ok_or_else(|| parse_err(1, "missing N"))?;
        let seed = seed.ok_or_else(|| parse_err(1, "missing seed"))?;
        let geometry = geometry.ok_or_else(|| parse_err(1, "missing geometry"))?;
        let units = PhysicalUnits::from_nm(wavelength.ok_or_else(|| parse_err(1, "missing wavelength_nm"))?)
            .map_err(|e| parse_err(1, e.to_string()))?;
        if n == 0 {
            return Err(Error::EmptyEnsemble);
        }

        let mut positions = Vec::with_capacity(n);
        let mut line_no = 1;
        for line in lines {
            line_no += 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if positions.len() == n {
                return Err(parse_err(line_no, format!("more than N={n} rows")));
            }
            let coords: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| parse_err(line_no, e.to_string()))?;
            if coords.len() != 3 || coords.iter().any(|c| !c.is_finite()) {
                return Err(parse_err(line_no, "expected three finite coordinates"));
            }
            positions.push(Vector3::new(coords[0], coords[1], coords[2]));
        }
        if positions.len() != n {
            return Err(parse_err(line_no, format!("header declares N={n} but {} rows present", positions.len())));
        }
        let density_per_cm3 = geometry.map(|g| n as f64 / g.volume_cm3());
        Ok(Self { positions, geometry, seed, units, density_per_cm3 })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }

    /// SHA-256 of the serialized ensemble, hex encoded.
    pub fn content_hash(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        Sha256::digest(&buf).iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

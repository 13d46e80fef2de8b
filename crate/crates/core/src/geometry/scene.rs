use std::collections::HashMap;
use std::fmt::Write as _;

use super::{place_dodecahedron_coils, AxisBox, Coil, ConductorRegion, Vec3};
use crate::error::{Error, Result};

pub const DEFAULT_RECEIVERS: usize = 9812;

/// Geometry of the dodecahedral drive-coil array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoilSetSpec {
    pub orbit_radius: f64,
    pub r1: f64,
    pub r2: f64,
    pub h: f64,
    pub count: usize,
}

impl Default for CoilSetSpec {
    fn default() -> Self {
        CoilSetSpec {
            orbit_radius: 1.5,
            r1: 0.4,
            r2: 0.6,
            h: 0.2,
            count: 20,
        }
    }
}

/// Full description of one experiment.
#[derive(Debug, Clone)]
pub struct SceneConfig {
    pub mu: f64,
    pub omega: f64,
    pub radius: f64,
    pub omega_domain_radius: f64,
    pub receivers: usize,
    pub coil_set: CoilSetSpec,
    conductors: Vec<ConductorRegion>,
    coils: Vec<Coil>,
}

impl SceneConfig {
    pub fn new(
        mu: f64,
        omega: f64,
        radius: f64,
        omega_domain_radius: f64,
        coil_set: CoilSetSpec,
        conductors: Vec<ConductorRegion>,
    ) -> Result<Self> {
        if coil_set.count != 20 {
            return Err(Error::invalid(format!(
                "only the 20-coil dodecahedral array is supported, got count = {}",
                coil_set.count
            )));
        }
        let coils = place_dodecahedron_coils(coil_set.orbit_radius, coil_set.r1, coil_set.r2, coil_set.h)?;
        let scene = SceneConfig {
            mu,
            omega,
            radius,
            omega_domain_radius,
            receivers: DEFAULT_RECEIVERS,
            coil_set,
            conductors,
            coils,
        };
        scene.validate()?;
        Ok(scene)
    }

    /// The experimental setup of the reference examples (μ = 4π·10⁻⁷,
    /// ω = 2π·10⁸, R = 1.5, Ω of radius 1) with the given conductors.
    pub fn reference(conductors: Vec<ConductorRegion>) -> Result<Self> {
        Self::new(
            4.0 * std::f64::consts::PI * 1e-7,
            2.0 * std::f64::consts::PI * 1e8,
            1.5,
            1.0,
            CoilSetSpec::default(),
            conductors,
        )
    }

    /// Replaces the coil array, e.g. with a subset or a rotated copy.
    pub fn with_coils(mut self, coils: Vec<Coil>) -> Result<Self> {
        if coils.is_empty() {
            return Err(Error::invalid("scene needs at least one coil"));
        }
        self.coils = coils;
        Ok(self)
    }

    pub fn with_conductors(mut self, conductors: Vec<ConductorRegion>) -> Result<Self> {
        self.conductors = conductors;
        self.validate()?;
        Ok(self)
    }

    pub fn conductors(&self) -> &[ConductorRegion] {
        &self.conductors
    }

    pub fn coils(&self) -> &[Coil] {
        &self.coils
    }

    /// dist(D, Γ), lower-bounded through the farthest box corner.
    pub fn separation(&self) -> f64 {
        let reach = self.conductors.iter().map(ConductorRegion::max_norm).fold(0.0, f64::max);
        self.radius - reach
    }

    pub fn in_conductor(&self, p: &Vec3) -> bool {
        self.conductors.iter().any(|c| c.contains(p))
    }

    /// Distance from `p` to the union of all conductors.
    pub fn conductor_distance(&self, p: &Vec3) -> f64 {
        self.conductors.iter().map(|c| c.distance(p)).fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mu", self.mu), ("omega", self.omega)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.omega_domain_radius > 0.0 && self.radius > self.omega_domain_radius) {
            return Err(Error::invalid(format!(
                "need R > omega_domain_radius > 0, got R = {} and omega_domain_radius = {}",
                self.radius, self.omega_domain_radius
            )));
        }
        if self.receivers < 100 {
            return Err(Error::invalid(format!("need at least 100 receivers, got {}", self.receivers)));
        }
        for (i, c) in self.conductors.iter().enumerate() {
            if c.max_norm() >= self.omega_domain_radius {
                return Err(Error::invalid(format!(
                    "conductor {i} reaches |x| = {:.6}, outside the sampling ball of radius {}",
                    c.max_norm(),
                    self.omega_domain_radius
                )));
            }
            for (j, d) in self.conductors.iter().enumerate().skip(i + 1) {
                let overlap = c.boxes().iter().any(|a| {
                    d.boxes().iter().any(|b| {
                        let (a0, a1, b0, b1) = (a.lower(), a.upper(), b.lower(), b.upper());
                        (0..3).all(|k| a0[k] < b1[k] && b0[k] < a1[k])
                    })
                });
                if overlap {
                    return Err(Error::invalid(format!("conductors {i} and {j} overlap")));
                }
            }
        }
        Ok(())
    }

    /// Parses the key-value scene format.
    pub fn parse(text: &str) -> Result<Self> {
        parse_scene(text)
    }

    /// Serializes to the scene format; `parse(to_text())` round-trips.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mu = {:e}", self.mu);
        let _ = writeln!(s, "omega = {:e}", self.omega);
        let _ = writeln!(s, "R = {}", self.radius);
        let _ = writeln!(s, "omega_domain_radius = {}", self.omega_domain_radius);
        let _ = writeln!(s, "receivers = {}", self.receivers);
        let c = &self.coil_set;
        let _ = writeln!(s, "\n[coil_set]");
        let _ = writeln!(s, "orbit_radius = {}", c.orbit_radius);
        let _ = writeln!(s, "r1 = {}\nr2 = {}\nh = {}\ncount = {}", c.r1, c.r2, c.h, c.count);
        for region in &self.conductors {
            for b in region.boxes() {
                let _ = writeln!(s, "\n[conductor]\ntype = box");
                let _ = writeln!(s, "center = ({}, {}, {})", b.center.x, b.center.y, b.center.z);
                let _ = writeln!(s, "edges = ({}, {}, {})", b.edges.x, b.edges.y, b.edges.z);
                let _ = writeln!(s, "sigma = {}", region.sigma());
            }
        }
        s
    }
}

#[derive(Default)]
struct Section {
    line: usize,
    entries: HashMap<String, (usize, String)>,
}

impl Section {
    fn raw(&self, key: &str) -> Result<(usize, &str)> {
        self.entries
            .get(key)
            .map(|(l, v)| (*l, v.as_str()))
            .ok_or_else(|| Error::MissingKey(key.to_string()))
    }

    fn number(&self, key: &str) -> Result<f64> {
        let (line, v) = self.raw(key)?;
        parse_number(v, line)
    }

    fn vector(&self, key: &str) -> Result<Vec3> {
        let (line, v) = self.raw(key)?;
        let inner = v
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| Error::SceneParse {
                line,
                msg: format!("`{key}` must be a triple `(x, y, z)`"),
            })?;
        let parts: Vec<&str> = inner.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::SceneParse {
                line,
                msg: format!("`{key}` needs exactly three components"),
            });
        }
        Ok(Vec3::new(
            parse_number(parts[0], line)?,
            parse_number(parts[1], line)?,
            parse_number(parts[2], line)?,
        ))
    }
}

fn parse_number(v: &str, line: usize) -> Result<f64> {
    let t = v.trim();
    match t.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(Error::SceneParse {
            line,
            msg: format!("`{t}` is not a finite number"),
        }),
    }
}

fn parse_scene(text: &str) -> Result<SceneConfig> {
    let mut top = Section::default();
    let mut coil_set: Option<Section> = None;
    let mut conductors: Vec<Section> = Vec::new();
    // 0 = top level, 1 = coil_set, 2 = last conductor
    let mut current = 0;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            match name.trim() {
                "coil_set" => {
                    if coil_set.is_some() {
                        return Err(Error::SceneParse {
                            line: line_no,
                            msg: "duplicate [coil_set] section".into(),
                        });
                    }
                    coil_set = Some(Section {
                        line: line_no,
                        ..Section::default()
                    });
                    current = 1;
                }
                "conductor" => {
                    conductors.push(Section {
                        line: line_no,
                        ..Section::default()
                    });
                    current = 2;
                }
                other => {
                    return Err(Error::SceneParse {
                        line: line_no,
                        msg: format!("unknown section [{other}]"),
                    })
                }
            }
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::SceneParse {
            line: line_no,
            msg: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim().to_string();
        let section = match current {
            0 => &mut top,
            1 => coil_set.as_mut().expect("coil_set section open"),
            _ => conductors.last_mut().expect("conductor section open"),
        };
        if section.entries.insert(key.clone(), (line_no, value.trim().to_string())).is_some() {
            return Err(Error::SceneParse {
                line: line_no,
                msg: format!("duplicate key `{key}`"),
            });
        }
    }

    let known_top = ["mu", "omega", "R", "omega_domain_radius", "receivers"];
    let known_coil = ["orbit_radius", "r1", "r2", "h", "count"];
    let known_cond = ["type", "center", "edges", "sigma"];
    check_keys(&top, &known_top)?;

    let mu = top.number("mu")?;
    let omega = top.number("omega")?;
    let radius = top.number("R")?;
    let omega_r = top.number("omega_domain_radius")?;
    let receivers = match top.entries.get("receivers") {
        Some((line, v)) => v.parse::<usize>().map_err(|_| Error::SceneParse {
            line: *line,
            msg: format!("`receivers` must be a positive integer, got `{v}`"),
        })?,
        None => DEFAULT_RECEIVERS,
    };

    let cs = coil_set.ok_or_else(|| Error::MissingKey("[coil_set]".into()))?;
    check_keys(&cs, &known_coil)?;
    let count = {
        let (line, v) = cs.raw("count")?;
        v.parse::<usize>().map_err(|_| Error::SceneParse {
            line,
            msg: format!("`count` must be an integer, got `{v}`"),
        })?
    };
    let spec = CoilSetSpec {
        orbit_radius: cs.number("orbit_radius")?,
        r1: cs.number("r1")?,
        r2: cs.number("r2")?,
        h: cs.number("h")?,
        count,
    };

    let mut regions = Vec::with_capacity(conductors.len());
    for c in &conductors {
        check_keys(c, &known_cond)?;
        let (line, kind) = c.raw("type")?;
        if kind != "box" {
            return Err(Error::SceneParse {
                line,
                msg: format!("unsupported conductor type `{kind}`"),
            });
        }
        let center = c.vector("center")?;
        let edges = c.vector("edges")?;
        let sigma = c.number("sigma")?;
        let region = AxisBox::new(center, edges)
            .and_then(|b| ConductorRegion::single(b, sigma))
            .map_err(|e| Error::SceneParse {
                line: c.line,
                msg: e.to_string(),
            })?;
        regions.push(region);
    }

    let mut scene = SceneConfig::new(mu, omega, radius, omega_r, spec, regions)?;
    scene.receivers = receivers;
    scene.validate()?;
    Ok(scene)
}

fn check_keys(section: &Section, known: &[&str]) -> Result<()> {
    let mut unknown: Vec<_> = section
        .entries
        .iter()
        .filter(|(k, _)| !known.contains(&k.as_str()))
        .map(|(k, (l, _))| (*l, k.clone()))
        .collect();
    unknown.sort();
    match unknown.first() {
        Some((line, key)) => Err(Error::SceneParse {
            line: *line,
            msg: format!("unknown key `{key}`"),
        }),
        None => Ok(()),
    }
}

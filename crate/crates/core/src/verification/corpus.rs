//! Deterministic test-function corpora: products of base profiles,
//! translations and modulations, swept over a list of dilations.

use crate::error::{Error, Result};
use crate::grid::{test_function, GridFunction, GridSpec, Profile};

use super::config::CorpusConfig;

/// Offset between the members feeding consecutive slots of a multilinear case.
const SLOT_STRIDE: usize = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct Member {
    pub profile: Profile,
    pub x0: Vec<f64>,
    pub v: Vec<f64>,
}

impl Member {
    pub fn label(&self) -> String {
        let fmt = |p: &[f64]| p.iter().map(|c| format!("{c}")).collect::<Vec<_>>().join(",");
        let name = match self.profile {
            Profile::Gaussian => "gauss",
            Profile::Bump => "bump",
            Profile::Modulated => "packet",
        };
        format!("{name}[x0={};v={}]", fmt(&self.x0), fmt(&self.v))
    }
}

#[derive(Clone, Debug)]
pub struct Corpus {
    grid: GridSpec,
    members: Vec<Member>,
    dilations: Vec<f64>,
    max_tail_mass: f64,
}

impl Corpus {
    /// Enumerates profiles (outermost), translations, then modulations and
    /// keeps the first `size`; every member is built at every dilation so
    /// aliasing and tail-mass violations surface here.
    pub fn new(cfg: &CorpusConfig, grid: &GridSpec) -> Result<Self> {
        let n = grid.dim();
        if cfg.profiles.is_empty() || cfg.translations.is_empty() || cfg.modulations.is_empty() {
            return Err(Error::param("corpus", "profiles, translations and modulations must be non-empty"));
        }
        if cfg.dilations.is_empty() {
            return Err(Error::param("corpus", "need at least one dilation"));
        }
        for p in cfg.translations.iter().chain(&cfg.modulations) {
            if p.len() != n {
                return Err(Error::param("corpus", format!("point {p:?} needs {n} components")));
            }
        }
        let mut members = Vec::new();
        for &profile in &cfg.profiles {
            for x0 in &cfg.translations {
                for v in &cfg.modulations {
                    members.push(Member {
                        profile,
                        x0: x0.clone(),
                        v: v.clone(),
                    });
                }
            }
        }
        if cfg.size == 0 || cfg.size > members.len() {
            return Err(Error::param(
                "corpus.size",
                format!("need 1..={} members, got {}", members.len(), cfg.size),
            ));
        }
        members.truncate(cfg.size);
        let mut corpus = Self {
            grid: *grid,
            members,
            dilations: cfg.dilations.clone(),
            max_tail_mass: 0.0,
        };
        let mut worst = 0.0f64;
        for m in 0..corpus.members.len() {
            for k in 0..corpus.dilations.len() {
                let f = corpus.function(m, k).map_err(|e| {
                    Error::param("corpus", format!("{} at dilation {}: {e}", corpus.members[m].label(), corpus.dilations[k]))
                })?;
                worst = worst.max(f.tail_mass());
            }
        }
        corpus.max_tail_mass = worst;
        Ok(corpus)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dilations(&self) -> &[f64] {
        &self.dilations
    }

    /// Largest tail mass over all members and dilations.
    pub fn max_tail_mass(&self) -> f64 {
        self.max_tail_mass
    }

    /// Member `m` at sweep index `k`.
    pub fn function(&self, m: usize, k: usize) -> Result<GridFunction> {
        let mem = &self.members[m];
        test_function(&self.grid, mem.profile, self.dilations[k], &mem.x0, &mem.v)
    }

    /// Members feeding the `l` slots of case `c`: `c, c + 5, c + 10, ...`
    /// modulo the corpus size.
    pub fn slots(&self, c: usize, l: usize) -> Vec<usize> {
        (0..l).map(|j| (c + SLOT_STRIDE * j) % self.members.len()).collect()
    }

    pub fn case_label(&self, c: usize, l: usize) -> String {
        self.slots(c, l)
            .iter()
            .map(|&m| self.members[m].label())
            .collect::<Vec<_>>()
            .join("*")
    }

    /// The same corpus on another grid (e.g. a refinement).
    pub fn on_grid(&self, grid: &GridSpec) -> Result<Self> {
        let mut out = Self {
            grid: *grid,
            members: self.members.clone(),
            dilations: self.dilations.clone(),
            max_tail_mass: 0.0,
        };
        let mut worst = 0.0f64;
        for m in 0..out.members.len() {
            for k in 0..out.dilations.len() {
                worst = worst.max(out.function(m, k)?.tail_mass());
            }
        }
        out.max_tail_mass = worst;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> CorpusConfig {
        CorpusConfig {
            profiles: vec![Profile::Gaussian, Profile::Modulated],
            dilations: vec![0.0, -0.5, -1.0],
            translations: vec![vec![0.0], vec![1.0]],
            modulations: vec![vec![0.0], vec![1.0], vec![-2.0]],
            size: 10,
        }
    }

    #[test]
    fn enumeration_order_and_truncation() {
        let g = GridSpec::line(16.0, 512).unwrap();
        let c = Corpus::new(&cfg(), &g).unwrap();
        assert_eq!(c.len(), 10);
        assert_eq!(c.members()[0].profile, Profile::Gaussian);
        assert_eq!(c.members()[6].profile, Profile::Modulated);
        assert_eq!(c.members()[4].x0, vec![1.0]);
        assert_eq!(c.slots(7, 2), vec![7, 2]);
        assert!(c.max_tail_mass() <= 1e-6);
    }

    #[test]
    fn aliasing_surfaces_at_construction() {
        let g = GridSpec::line(16.0, 64).unwrap();
        assert!(Corpus::new(&cfg(), &g).is_err());
        let mut big = cfg();
        big.size = 13;
        assert!(Corpus::new(&big, &GridSpec::line(16.0, 512).unwrap()).is_err());
    }

    #[test]
    fn refinement_keeps_members() {
        let g = GridSpec::line(16.0, 512).unwrap();
        let c = Corpus::new(&cfg(), &g).unwrap();
        let r = c.on_grid(&g.refined().unwrap()).unwrap();
        assert_eq!(r.members(), c.members());
        let a = c.function(3, 1).unwrap();
        let b = r.function(3, 1).unwrap();
        for j in 0..512 {
            assert!((a.samples()[j] - b.samples()[2 * j]).norm() < 1e-14);
        }
    }
}

//! Potential families registered by name, and id resolution.
//!
//! An id is `family:args` or a `&`-joined product of such factors, e.g.
//! `xy:1`, `ivgff:0.5`, `annealed:2@0.5,4@0.5`, `table:mine`, `xy:1&xy:1`.

use super::{
    make_annealed, make_delta, make_ivgff, make_lipschitz, make_table, make_xy, merge_parallel,
    HeightPotential, PotentialPair, Provenance,
};
use crate::error::{Error, Result};
use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

pub trait PotentialFamily: Send + Sync {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    /// Parses the part of an id after `family:`.
    fn parse(&self, args: &str) -> Result<Provenance>;
    fn build(&self, prov: &Provenance, reg: &PotentialRegistry) -> Result<PotentialPair>;
    /// Provenance of the `k`-th convolution root, when one exists in closed form.
    fn split(&self, prov: &Provenance, _k: u32) -> Result<Provenance> {
        Err(Error::NotScalable(prov.id()))
    }
}

fn parse_beta(family: &str, args: &str) -> Result<f64> {
    args.trim()
        .parse::<f64>()
        .map_err(|_| Error::Potential(format!("{family}: expected a number, found `{args}`")))
}

fn mismatch(family: &str, prov: &Provenance) -> Error {
    Error::Potential(format!("family `{family}` cannot build `{prov}`"))
}

struct Xy;
struct Ivgff;
struct Lipschitz;
struct Annealed;
struct Delta;
struct Table;

impl PotentialFamily for Xy {
    fn name(&self) -> &'static str {
        "xy"
    }
    fn summary(&self) -> &'static str {
        "xy:BETA    c_n = I_n(BETA), U = -BETA cos"
    }
    fn parse(&self, args: &str) -> Result<Provenance> {
        Ok(Provenance::Xy(parse_beta("xy", args)?))
    }
    fn build(&self, prov: &Provenance, _: &PotentialRegistry) -> Result<PotentialPair> {
        match prov {
            Provenance::Xy(b) => make_xy(*b),
            _ => Err(mismatch("xy", prov)),
        }
    }
    fn split(&self, prov: &Provenance, k: u32) -> Result<Provenance> {
        match prov {
            Provenance::Xy(b) => Ok(Provenance::Xy(b / k as f64)),
            _ => Err(mismatch("xy", prov)),
        }
    }
}

impl PotentialFamily for Ivgff {
    fn name(&self) -> &'static str {
        "ivgff"
    }
    fn summary(&self) -> &'static str {
        "ivgff:BETA    V(n) = BETA n^2 (integer-valued Gaussian free field)"
    }
    fn parse(&self, args: &str) -> Result<Provenance> {
        Ok(Provenance::Ivgff(parse_beta("ivgff", args)?))
    }
    fn build(&self, prov: &Provenance, _: &PotentialRegistry) -> Result<PotentialPair> {
        match prov {
            Provenance::Ivgff(b) => make_ivgff(*b),
            _ => Err(mismatch("ivgff", prov)),
        }
    }
}

impl PotentialFamily for Lipschitz {
    fn name(&self) -> &'static str {
        "lipschitz"
    }
    fn summary(&self) -> &'static str {
        "lipschitz:BETA    c_0 = 1, c_1 = e^-BETA (requires e^-BETA < 1/2)"
    }
    fn parse(&self, args: &str) -> Result<Provenance> {
        Ok(Provenance::Lipschitz(parse_beta("lipschitz", args)?))
    }
    fn build(&self, prov: &Provenance, _: &PotentialRegistry) -> Result<PotentialPair> {
        match prov {
            Provenance::Lipschitz(b) => make_lipschitz(*b),
            _ => Err(mismatch("lipschitz", prov)),
        }
    }
}

impl PotentialFamily for Annealed {
    fn name(&self) -> &'static str {
        "annealed"
    }
    fn summary(&self) -> &'static str {
        "annealed:G@W,...    c_n = sum W e^(-G n^2 / 2)"
    }
    fn parse(&self, args: &str) -> Result<Provenance> {
        let pairs = args
            .split(',')
            .map(|item| {
                let (g, w) = item.split_once('@').ok_or_else(|| {
                    Error::Potential(format!("annealed: expected GAMMA@WEIGHT, found `{item}`"))
                })?;
                Ok((parse_beta("annealed", g)?, parse_beta("annealed", w)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Provenance::Annealed(pairs))
    }
    fn build(&self, prov: &Provenance, _: &PotentialRegistry) -> Result<PotentialPair> {
        match prov {
            Provenance::Annealed(pairs) => make_annealed(pairs),
            _ => Err(mismatch("annealed", prov)),
        }
    }
}

impl PotentialFamily for Delta {
    fn name(&self) -> &'static str {
        "delta"
    }
    fn summary(&self) -> &'static str {
        "delta    V(0) = 0, V = infinity elsewhere (U = 0)"
    }
    fn parse(&self, args: &str) -> Result<Provenance> {
        if args.is_empty() {
            Ok(Provenance::Delta)
        } else {
            Err(Error::Potential("delta takes no arguments".into()))
        }
    }
    fn build(&self, _: &Provenance, _: &PotentialRegistry) -> Result<PotentialPair> {
        Ok(make_delta())
    }
    fn split(&self, _: &Provenance, _: u32) -> Result<Provenance> {
        Ok(Provenance::Delta)
    }
}

impl PotentialFamily for Table {
    fn name(&self) -> &'static str {
        "table"
    }
    fn summary(&self) -> &'static str {
        "table:NAME    custom two-column (n, c_n) table registered under NAME"
    }
    fn parse(&self, args: &str) -> Result<Provenance> {
        if args.is_empty() || args.contains(['&', ' ']) {
            return Err(Error::Potential(format!("invalid table name `{args}`")));
        }
        Ok(Provenance::Table(args.to_string()))
    }
    fn build(&self, prov: &Provenance, reg: &PotentialRegistry) -> Result<PotentialPair> {
        match prov {
            Provenance::Table(name) => {
                let h = reg.tables.get(name).ok_or_else(|| {
                    Error::Potential(format!("no custom table named `{name}` is loaded"))
                })?;
                make_table(name, h.clone())
            }
            _ => Err(mismatch("table", prov)),
        }
    }
}

/// Family strategies by name, custom tables, and a cache of built pairs.
pub struct PotentialRegistry {
    families: BTreeMap<&'static str, Box<dyn PotentialFamily>>,
    tables: BTreeMap<String, HeightPotential>,
    cache: Mutex<HashMap<String, Arc<PotentialPair>>>,
}

impl Default for PotentialRegistry {
    fn default() -> Self {
        let mut reg = PotentialRegistry {
            families: BTreeMap::new(),
            tables: BTreeMap::new(),
            cache: Mutex::new(HashMap::new()),
        };
        reg.register(Box::new(Xy));
        reg.register(Box::new(Ivgff));
        reg.register(Box::new(Lipschitz));
        reg.register(Box::new(Annealed));
        reg.register(Box::new(Delta));
        reg.register(Box::new(Table));
        reg
    }
}

impl PotentialRegistry {
    pub fn register(&mut self, family: Box<dyn PotentialFamily>) {
        self.families.insert(family.name(), family);
    }

    pub fn register_table(&mut self, name: &str, table: HeightPotential) {
        self.tables.insert(name.to_string(), table);
        self.cache.lock().unwrap().clear();
    }

    pub fn families(&self) -> impl Iterator<Item = &dyn PotentialFamily> {
        self.families.values().map(|f| f.as_ref())
    }

    pub fn family(&self, name: &str) -> Result<&dyn PotentialFamily> {
        self.families.get(name).map(|f| f.as_ref()).ok_or_else(|| {
            Error::Potential(format!(
                "unknown potential family `{name}` (known: {})",
                self.families.keys().copied().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    pub fn parse(&self, id: &str) -> Result<Provenance> {
        let mut parts = id
            .split('&')
            .map(|factor| {
                let (name, args) = factor.split_once(':').unwrap_or((factor, ""));
                self.family(name)?.parse(args)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Provenance::Product(parts)
        })
    }

    pub fn build(&self, prov: &Provenance) -> Result<Arc<PotentialPair>> {
        let id = prov.id();
        if let Some(p) = self.cache.lock().unwrap().get(&id) {
            return Ok(p.clone());
        }
        let pair = match prov {
            Provenance::Product(parts) => {
                let mut acc = make_delta();
                for part in parts {
                    acc = merge_parallel(&acc, self.build(part)?.as_ref())?;
                }
                acc
            }
            _ => self.family(prov.family())?.build(prov, self)?,
        };
        let pair = Arc::new(pair);
        self.cache.lock().unwrap().insert(id, pair.clone());
        Ok(pair)
    }

    /// Parse and build an id.
    pub fn resolve(&self, id: &str) -> Result<Arc<PotentialPair>> {
        self.build(&self.parse(id)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolves_ids() {
        let reg = PotentialRegistry::default();
        assert_eq!(reg.resolve("xy:1.0").unwrap().id(), "xy:1");
        assert_eq!(reg.resolve("delta").unwrap().id(), "delta");
        assert_eq!(reg.resolve("ivgff:0.5&ivgff:0.5").unwrap().id(), "ivgff:1");
        assert_eq!(reg.resolve("annealed:2@0.5,4@0.5").unwrap().id(), "annealed:2@0.5,4@0.5");
        assert!(reg.resolve("potts:2").is_err());
        assert!(reg.resolve("xy:abc").is_err());
        assert!(reg.resolve("table:none").is_err());
    }

    #[test]
    fn custom_tables() {
        let mut reg = PotentialRegistry::default();
        reg.register_table("two", HeightPotential::new(vec![1.0, 0.2, 0.01]).unwrap());
        let p = reg.resolve("table:two").unwrap();
        assert_eq!(p.height.coeffs(), &[1.0, 0.2, 0.01]);
        assert!(reg.family("table").unwrap().split(&p.provenance, 2).is_err());
    }

    #[test]
    fn ids_reparse_to_themselves() {
        let reg = PotentialRegistry::default();
        for id in ["xy:0.3333333333333333", "lipschitz:1.5", "xy:1&ivgff:2", "annealed:1@1"] {
            assert_eq!(reg.parse(id).unwrap().id(), id);
        }
    }
}

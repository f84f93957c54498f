//! Country and product registries.
//!
//! Every analysis runs over a fixed node set: one node per (product, country)
//! pair. The registries pin the dense index spaces, so node ids are stable
//! across the whole pipeline: node = product * country_count + country.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::Error;

/// Product group registry. Codes must be contiguous `0..len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductRegistry {
    labels: Vec<String>,
}

impl ProductRegistry {
    pub fn new(entries: Vec<(u8, String)>) -> Result<Self, Error> {
        if entries.is_empty() {
            return Err(Error::Registry("product registry is empty".into()));
        }
        let mut sorted = entries;
        sorted.sort_by_key(|(code, _)| *code);
        for (i, (code, _)) in sorted.iter().enumerate() {
            if *code as usize != i {
                return Err(Error::Registry(format!(
                    "product codes must be contiguous from 0, found {code} at position {i}"
                )));
            }
        }
        Ok(Self {
            labels: sorted.into_iter().map(|(_, label)| label).collect(),
        })
    }

    /// The ten one-digit SITC product groups.
    pub fn standard_sitc() -> Self {
        let labels = [
            "Food and live animals",
            "Beverages and tobacco",
            "Crude materials, inedible, except fuels",
            "Mineral fuels, lubricants and related materials",
            "Animal and vegetable oils, fats and waxes",
            "Chemicals and related products, n.e.s.",
            "Manufactured goods classified chiefly by material",
            "Machinery and transport equipment",
            "Miscellaneous manufactured articles",
            "Commodities and transactions not classified elsewhere in the SITC",
        ];
        Self {
            labels: labels.iter().map(|l| String::from(*l)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, code: u8) -> Option<&str> {
        self.labels.get(code as usize).map(String::as_str)
    }

    pub fn contains(&self, code: u8) -> bool {
        (code as usize) < self.labels.len()
    }
}

/// Country registry. The dense index of a country is its position in the
/// file; ISO alpha-2 style codes must be unique.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountryRegistry {
    codes: Vec<String>,
    names: Vec<String>,
    by_code: BTreeMap<String, u16>,
}

impl CountryRegistry {
    pub fn new(entries: Vec<(String, String)>) -> Result<Self, Error> {
        if entries.is_empty() {
            return Err(Error::Registry("country registry is empty".into()));
        }
        if entries.len() > u16::MAX as usize {
            return Err(Error::Registry("too many countries".into()));
        }
        let mut codes = Vec::with_capacity(entries.len());
        let mut names = Vec::with_capacity(entries.len());
        let mut by_code = BTreeMap::new();
        for (idx, (code, name)) in entries.into_iter().enumerate() {
            let code = normalize_code(&code)?;
            if by_code.insert(code.clone(), idx as u16).is_some() {
                return Err(Error::Registry(format!("duplicate country code {code}")));
            }
            codes.push(code);
            names.push(name);
        }
        Ok(Self { codes, names, by_code })
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn code(&self, idx: u16) -> Option<&str> {
        self.codes.get(idx as usize).map(String::as_str)
    }

    pub fn name(&self, idx: u16) -> Option<&str> {
        self.names.get(idx as usize).map(String::as_str)
    }

    /// Looks up a code, tolerating lowercase and surrounding whitespace.
    pub fn index_of(&self, code: &str) -> Option<u16> {
        let normalized = normalize_code(code).ok()?;
        self.by_code.get(&normalized).copied()
    }
}

fn normalize_code(raw: &str) -> Result<String, Error> {
    let trimmed = raw.trim();
    if trimmed.len() != 2 || !trimmed.chars().all(|c| c.is_ascii_alphanumeric()) {
        return Err(Error::Registry(format!(
            "country code {trimmed:?} is not a 2-character alphanumeric code"
        )));
    }
    Ok(trimmed.to_ascii_uppercase())
}

/// The pair of registries that defines the node space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Registries {
    pub products: ProductRegistry,
    pub countries: CountryRegistry,
}

impl Registries {
    pub fn new(products: ProductRegistry, countries: CountryRegistry) -> Self {
        Self { products, countries }
    }

    pub fn product_count(&self) -> usize {
        self.products.len()
    }

    pub fn country_count(&self) -> usize {
        self.countries.len()
    }

    pub fn node_count(&self) -> usize {
        self.products.len() * self.countries.len()
    }

    #[inline]
    pub fn node_index(&self, product: u8, country: u16) -> u32 {
        product as u32 * self.countries.len() as u32 + country as u32
    }

    #[inline]
    pub fn node_parts(&self, node: u32) -> (u8, u16) {
        let nc = self.countries.len() as u32;
        ((node / nc) as u8, (node % nc) as u16)
    }
}

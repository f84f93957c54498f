//! Shared fixtures for unit tests.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::registry::{CountryRegistry, ProductRegistry, Registries};

pub(crate) fn test_registries(countries: &[&str], n_products: u8) -> Registries {
    let products =
        ProductRegistry::new((0..n_products).map(|p| (p, format!("product {p}"))).collect())
            .unwrap();
    let countries = CountryRegistry::new(
        countries.iter().map(|c| (c.to_string(), c.to_string())).collect::<Vec<_>>(),
    )
    .unwrap();
    Registries::new(products, countries)
}

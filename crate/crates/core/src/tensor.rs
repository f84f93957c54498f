//! The money tensor: per-year trade volumes over (product, exporter, importer).
//!
//! Reported bilateral flows come in twice, once from the importer and once
//! from the exporter. The retained cell is the larger of the two reports,
//! which limits the impact of missing or delayed reporting. Duplicate rows
//! for the same flow direction are summed before the max is taken.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::error::Error;
use crate::registry::Registries;

/// Which side reported the transaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Import,
    Export,
}

/// One validated trade record with registry-resolved indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeRecord {
    pub year: i32,
    pub reporter: u16,
    pub partner: u16,
    pub product: u8,
    pub flow: Flow,
    pub value: f64,
}

/// Link and volume totals of a tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkStats {
    /// Number of strictly positive (product, exporter, importer) cells.
    pub links: usize,
    /// Total traded volume in USD.
    pub volume: f64,
}

/// Immutable per-year trade volumes, keyed (product, exporter, importer).
#[derive(Debug, Clone, PartialEq)]
pub struct MoneyTensor {
    year: i32,
    registries: Registries,
    cells: BTreeMap<(u8, u16, u16), f64>,
    product_volume: Vec<f64>,
    volume: f64,
}

impl MoneyTensor {
    /// Builds the tensor for one year from validated records.
    ///
    /// Records for other years are ignored. Duplicate reports for the same
    /// (product, exporter, importer, flow) are summed, then the cell value is
    /// the max over the importer-side and exporter-side totals.
    pub fn build(records: &[TradeRecord], year: i32, registries: Registries) -> Result<Self, Error> {
        let mut import_side: BTreeMap<(u8, u16, u16), f64> = BTreeMap::new();
        let mut export_side: BTreeMap<(u8, u16, u16), f64> = BTreeMap::new();
        for rec in records.iter().filter(|r| r.year == year) {
            validate_cell(&registries, rec.product, rec.reporter, rec.partner, rec.value)?;
            let (exporter, importer, side) = match rec.flow {
                Flow::Import => (rec.partner, rec.reporter, &mut import_side),
                Flow::Export => (rec.reporter, rec.partner, &mut export_side),
            };
            *side.entry((rec.product, exporter, importer)).or_insert(0.0) += rec.value;
        }

        let mut cells = import_side;
        for (key, value) in export_side {
            let entry = cells.entry(key).or_insert(0.0);
            if value > *entry {
                *entry = value;
            }
        }
        cells.retain(|_, v| *v > 0.0);
        Self::from_cells(year, registries, cells)
    }

    /// Builds a tensor directly from (product, exporter, importer, value)
    /// flows; duplicate keys are summed.
    pub fn from_flows(
        year: i32,
        registries: Registries,
        flows: &[(u8, u16, u16, f64)],
    ) -> Result<Self, Error> {
        let mut cells: BTreeMap<(u8, u16, u16), f64> = BTreeMap::new();
        for &(product, exporter, importer, value) in flows {
            validate_cell(&registries, product, exporter, importer, value)?;
            *cells.entry((product, exporter, importer)).or_insert(0.0) += value;
        }
        cells.retain(|_, v| *v > 0.0);
        Self::from_cells(year, registries, cells)
    }

    fn from_cells(
        year: i32,
        registries: Registries,
        cells: BTreeMap<(u8, u16, u16), f64>,
    ) -> Result<Self, Error> {
        for (&(product, exporter, importer), &value) in &cells {
            validate_cell(&registries, product, exporter, importer, value)?;
        }
        // Per-product subtotals first, then the grand total over them, so
        // volume() and product_volume() always agree exactly.
        let mut product_volume = alloc::vec![0.0; registries.product_count()];
        for (&(product, _, _), &value) in &cells {
            product_volume[product as usize] += value;
        }
        let volume = product_volume.iter().sum();
        Ok(Self { year, registries, cells, product_volume, volume })
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn registries(&self) -> &Registries {
        &self.registries
    }

    /// Volume of product `p` exported from `exporter` to `importer`, 0 if absent.
    pub fn value(&self, product: u8, exporter: u16, importer: u16) -> f64 {
        self.cells.get(&(product, exporter, importer)).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(u8, u16, u16), &f64)> {
        self.cells.iter()
    }

    pub fn link_count(&self) -> usize {
        self.cells.len()
    }

    pub fn product_volume(&self, product: u8) -> f64 {
        self.product_volume.get(product as usize).copied().unwrap_or(0.0)
    }

    pub fn total_volume(&self) -> f64 {
        self.volume
    }

    pub fn stats(&self) -> NetworkStats {
        NetworkStats { links: self.link_count(), volume: self.volume }
    }

    /// A copy with every flow of `product` multiplied by `factor`.
    pub fn scale_product(&self, product: u8, factor: f64) -> Result<Self, Error> {
        if !self.registries.products.contains(product) {
            return Err(Error::UnknownProduct(product));
        }
        if !factor.is_finite() || factor < 0.0 {
            return Err(Error::Tensor(format!("scale factor {factor} must be finite and >= 0")));
        }
        let cells = self
            .cells
            .iter()
            .map(|(&key, &value)| {
                let scaled = if key.0 == product { value * factor } else { value };
                (key, scaled)
            })
            .filter(|(_, v)| *v > 0.0)
            .collect();
        Self::from_cells(self.year, self.registries.clone(), cells)
    }
}

fn validate_cell(
    registries: &Registries,
    product: u8,
    exporter: u16,
    importer: u16,
    value: f64,
) -> Result<(), Error> {
    if !registries.products.contains(product) {
        return Err(Error::UnknownProduct(product));
    }
    let nc = registries.country_count();
    for idx in [exporter, importer] {
        if idx as usize >= nc {
            return Err(Error::CountryOutOfRange { country: idx, count: nc });
        }
    }
    if exporter == importer {
        return Err(Error::Tensor(format!(
            "self-trade cell for country index {exporter} (product {product})"
        )));
    }
    if !value.is_finite() || value < 0.0 {
        return Err(Error::Tensor(format!("value {value} is not finite and non-negative")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::test_registries;
    use alloc::vec;

    fn rec(reporter: u16, partner: u16, product: u8, flow: Flow, value: f64) -> TradeRecord {
        TradeRecord { year: 2018, reporter, partner, product, flow, value }
    }

    #[test]
    fn max_rule_prefers_larger_report() {
        let reg = test_registries(&["US", "CN"], 1);
        // US (index 0) imports 100 from CN (index 1); CN reports exporting 90.
        let records = [
            rec(0, 1, 0, Flow::Import, 100.0),
            rec(1, 0, 0, Flow::Export, 90.0),
        ];
        let m = MoneyTensor::build(&records, 2018, reg).unwrap();
        assert_eq!(m.value(0, 1, 0), 100.0);
        assert_eq!(m.link_count(), 1);
    }

    #[test]
    fn lone_exporter_report_is_kept() {
        let reg = test_registries(&["US", "CN"], 1);
        let records = [rec(1, 0, 0, Flow::Export, 90.0)];
        let m = MoneyTensor::build(&records, 2018, reg).unwrap();
        assert_eq!(m.value(0, 1, 0), 90.0);
        assert_eq!(m.value(0, 0, 1), 0.0);
    }

    #[test]
    fn duplicate_rows_sum_before_max() {
        let reg = test_registries(&["US", "CN"], 1);
        let records = [
            rec(0, 1, 0, Flow::Import, 60.0),
            rec(0, 1, 0, Flow::Import, 50.0),
            rec(1, 0, 0, Flow::Export, 105.0),
        ];
        let m = MoneyTensor::build(&records, 2018, reg).unwrap();
        assert_eq!(m.value(0, 1, 0), 110.0);
    }

    #[test]
    fn build_is_order_independent() {
        let reg = test_registries(&["US", "CN", "DE"], 2);
        let mut records = vec![
            rec(0, 1, 0, Flow::Import, 3.0),
            rec(1, 0, 0, Flow::Export, 4.0),
            rec(2, 0, 1, Flow::Export, 7.0),
            rec(0, 2, 1, Flow::Import, 5.0),
        ];
        let a = MoneyTensor::build(&records, 2018, reg.clone()).unwrap();
        records.reverse();
        let b = MoneyTensor::build(&records, 2018, reg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn per_product_volumes_sum_to_total() {
        let reg = test_registries(&["US", "CN", "DE"], 3);
        let m = MoneyTensor::from_flows(
            2018,
            reg,
            &[
                (0, 0, 1, 0.1),
                (1, 1, 2, 0.7),
                (2, 2, 0, 1.3),
                (2, 0, 2, 2.9),
            ],
        )
        .unwrap();
        let by_product: f64 = (0..3).map(|p| m.product_volume(p)).sum();
        assert_eq!(by_product, m.total_volume());
        assert_eq!(m.stats().links, 4);
    }

    #[test]
    fn self_trade_cell_rejected() {
        let reg = test_registries(&["US", "CN"], 1);
        let err = MoneyTensor::from_flows(2018, reg, &[(0, 0, 0, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::Tensor(_)));
    }

    #[test]
    fn negative_value_rejected() {
        let reg = test_registries(&["US", "CN"], 1);
        let err = MoneyTensor::from_flows(2018, reg, &[(0, 0, 1, -3.0)]).unwrap_err();
        assert!(matches!(err, Error::Tensor(_)));
    }

    #[test]
    fn empty_tensor_reports_zero_stats() {
        let reg = test_registries(&["US", "CN"], 1);
        let m = MoneyTensor::build(&[], 2018, reg).unwrap();
        assert_eq!(m.stats(), NetworkStats { links: 0, volume: 0.0 });
    }

    #[test]
    fn scale_product_touches_one_product() {
        let reg = test_registries(&["US", "CN"], 2);
        let m = MoneyTensor::from_flows(2018, reg, &[(0, 0, 1, 2.0), (1, 1, 0, 3.0)]).unwrap();
        let scaled = m.scale_product(1, 1.5).unwrap();
        assert_eq!(scaled.value(0, 0, 1), 2.0);
        assert_eq!(scaled.value(1, 1, 0), 4.5);
        assert!(matches!(m.scale_product(9, 1.5), Err(Error::UnknownProduct(9))));
    }
}

use serde::Serialize;

use crate::json::Fixed6;

/// Pixel counts of the five-way partition for one image. The counts always
/// sum to `pixels`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageConsistency {
    pub id: String,
    pub pixels: u64,
    pub agreement: u64,
    pub quality: u64,
    pub naming: u64,
    pub quantity: u64,
    pub residual: u64,
}

impl ImageConsistency {
    pub fn empty(id: &str, pixels: u64) -> Self {
        ImageConsistency {
            id: id.to_string(),
            pixels,
            agreement: 0,
            quality: 0,
            naming: 0,
            quantity: 0,
            residual: 0,
        }
    }

    fn frac(&self, n: u64) -> f64 {
        if self.pixels == 0 {
            0.0
        } else {
            n as f64 / self.pixels as f64
        }
    }

    pub fn agreement_fraction(&self) -> f64 {
        self.frac(self.agreement)
    }

    pub fn quality_fraction(&self) -> f64 {
        self.frac(self.quality)
    }

    pub fn naming_fraction(&self) -> f64 {
        self.frac(self.naming)
    }

    pub fn quantity_fraction(&self) -> f64 {
        self.frac(self.quantity)
    }

    pub fn residual_fraction(&self) -> f64 {
        self.frac(self.residual)
    }

    pub fn is_complete(&self) -> bool {
        self.agreement + self.quality + self.naming + self.quantity + self.residual == self.pixels
    }

    fn fractions(&self) -> [f64; 5] {
        [
            self.agreement_fraction(),
            self.quality_fraction(),
            self.naming_fraction(),
            self.quantity_fraction(),
            self.residual_fraction(),
        ]
    }
}

/// One statistic per category.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TypeSummary {
    pub agreement: f64,
    pub quality: f64,
    pub naming: f64,
    pub quantity: f64,
    pub residual: f64,
}

impl TypeSummary {
    fn from_array(v: [f64; 5]) -> Self {
        TypeSummary {
            agreement: v[0],
            quality: v[1],
            naming: v[2],
            quantity: v[3],
            residual: v[4],
        }
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Per-image rows, kept sorted by id so merging shards is order-independent.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConsistencyReport {
    images: Vec<ImageConsistency>,
}

impl ConsistencyReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, row: ImageConsistency) {
        let at = self.images.partition_point(|r| r.id <= row.id);
        self.images.insert(at, row);
    }

    pub fn merge(&mut self, other: ConsistencyReport) {
        for row in other.images {
            self.push(row);
        }
    }

    pub fn images(&self) -> &[ImageConsistency] {
        &self.images
    }

    /// Unweighted mean of the per-image fractions.
    pub fn mean(&self) -> Option<TypeSummary> {
        if self.images.is_empty() {
            return None;
        }
        let mut acc = [0.0; 5];
        for row in &self.images {
            for (a, f) in acc.iter_mut().zip(row.fractions()) {
                *a += f;
            }
        }
        Some(TypeSummary::from_array(acc.map(|a| a / self.images.len() as f64)))
    }

    /// Median of the per-image fractions (mean of the middle two for even counts).
    pub fn median(&self) -> Option<TypeSummary> {
        if self.images.is_empty() {
            return None;
        }
        let mut out = [0.0; 5];
        for (k, slot) in out.iter_mut().enumerate() {
            let mut col: Vec<f64> = self.images.iter().map(|r| r.fractions()[k]).collect();
            *slot = median(&mut col);
        }
        Some(TypeSummary::from_array(out))
    }

    /// Fractions of the pooled pixel counts across all images.
    pub fn pooled(&self) -> Option<TypeSummary> {
        let mut total = ImageConsistency::empty("", 0);
        for r in &self.images {
            total.pixels += r.pixels;
            total.agreement += r.agreement;
            total.quality += r.quality;
            total.naming += r.naming;
            total.quantity += r.quantity;
            total.residual += r.residual;
        }
        (total.pixels > 0).then(|| TypeSummary::from_array(total.fractions()))
    }
}

#[derive(Serialize)]
struct SummaryJson {
    agreement: Fixed6,
    naming: Fixed6,
    quality: Fixed6,
    quantity: Fixed6,
    residual: Fixed6,
}

impl From<TypeSummary> for SummaryJson {
    fn from(s: TypeSummary) -> Self {
        SummaryJson {
            agreement: Fixed6(s.agreement),
            naming: Fixed6(s.naming),
            quality: Fixed6(s.quality),
            quantity: Fixed6(s.quantity),
            residual: Fixed6(s.residual),
        }
    }
}

#[derive(Serialize)]
struct RowJson<'a> {
    agreement: u64,
    agreement_fraction: Fixed6,
    id: &'a str,
    naming: u64,
    naming_fraction: Fixed6,
    pixels: u64,
    quality: u64,
    quality_fraction: Fixed6,
    quantity: u64,
    quantity_fraction: Fixed6,
    residual: u64,
    residual_fraction: Fixed6,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    image_count: usize,
    images: Vec<RowJson<'a>>,
    match_threshold: Fixed6,
    mean: Option<SummaryJson>,
    median: Option<SummaryJson>,
    pooled: Option<SummaryJson>,
    schema_version: &'static str,
}

impl Serialize for ConsistencyReport {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ReportJson {
            image_count: self.images.len(),
            images: self
                .images
                .iter()
                .map(|r| RowJson {
                    agreement: r.agreement,
                    agreement_fraction: Fixed6(r.agreement_fraction()),
                    id: &r.id,
                    naming: r.naming,
                    naming_fraction: Fixed6(r.naming_fraction()),
                    pixels: r.pixels,
                    quality: r.quality,
                    quality_fraction: Fixed6(r.quality_fraction()),
                    quantity: r.quantity,
                    quantity_fraction: Fixed6(r.quantity_fraction()),
                    residual: r.residual,
                    residual_fraction: Fixed6(r.residual_fraction()),
                })
                .collect(),
            match_threshold: Fixed6(super::MATCH_THRESHOLD),
            mean: self.mean().map(Into::into),
            median: self.median().map(Into::into),
            pooled: self.pooled().map(Into::into),
            schema_version: crate::SCHEMA_VERSION,
        }
        .serialize(serializer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: &str, agreement: u64, quality: u64) -> ImageConsistency {
        ImageConsistency {
            agreement,
            quality,
            ..ImageConsistency::empty(id, agreement + quality)
        }
    }

    #[test]
    fn mean_median_pooled() {
        let mut r = ConsistencyReport::new();
        r.push(row("b", 3, 1));
        r.push(row("a", 1, 1));
        r.push(row("c", 9, 1));
        assert_eq!(r.images()[0].id, "a");
        let mean = r.mean().unwrap();
        assert!((mean.agreement - (0.5 + 0.75 + 0.9) / 3.0).abs() < 1e-12);
        assert_eq!(r.median().unwrap().agreement, 0.75);
        assert_eq!(r.pooled().unwrap().agreement, 13.0 / 16.0);
    }

    #[test]
    fn merge_is_order_independent() {
        let rows = [row("x", 1, 2), row("y", 5, 0), row("z", 0, 3)];
        let mut left = ConsistencyReport::new();
        left.push(rows[2].clone());
        let mut right = ConsistencyReport::new();
        right.push(rows[1].clone());
        right.push(rows[0].clone());
        left.merge(right);
        let mut direct = ConsistencyReport::new();
        for r in rows {
            direct.push(r);
        }
        assert_eq!(left, direct);
        assert_eq!(ConsistencyReport::new().median(), None);
    }
}

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::ZoneId;

/// Joint demand realizations `d[s][i]` with scenario probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSet {
    locations: Vec<ZoneId>,
    demands: Vec<Vec<u64>>,
    probabilities: Vec<f64>,
}

const PROB_TOL: f64 = 1e-12;

impl ScenarioSet {
    pub fn new(
        locations: Vec<ZoneId>,
        demands: Vec<Vec<u64>>,
        probabilities: Vec<f64>,
    ) -> Result<Self> {
        if demands.is_empty() {
            return Err(Error::InvalidInput("scenario set is empty".into()));
        }
        if demands.len() != probabilities.len() {
            return Err(Error::Dimension(format!(
                "{} demand rows but {} probabilities",
                demands.len(),
                probabilities.len()
            )));
        }
        if let Some(row) = demands.iter().find(|r| r.len() != locations.len()) {
            return Err(Error::Dimension(format!(
                "demand row of width {} for {} locations",
                row.len(),
                locations.len()
            )));
        }
        if probabilities.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidInput("negative or non-finite probability".into()));
        }
        let total = compensated_sum(&probabilities);
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidInput(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(ScenarioSet {
            locations,
            demands,
            probabilities,
        })
    }

    /// Equal-weight scenarios, `p = 1/N` each.
    pub fn uniform(locations: Vec<ZoneId>, demands: Vec<Vec<u64>>) -> Result<Self> {
        let n = demands.len().max(1);
        let p = 1.0 / n as f64;
        let probs = vec![p; demands.len()];
        Self::new(locations, demands, probs)
    }

    pub fn locations(&self) -> &[ZoneId] {
        &self.locations
    }

    pub fn demands(&self) -> &[Vec<u64>] {
        &self.demands
    }

    pub fn demand(&self, scenario: usize) -> &[u64] {
        &self.demands[scenario]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.demands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demands.is_empty()
    }

    pub fn width(&self) -> usize {
        self.locations.len()
    }

    /// Probability-weighted mean demand per location, rounded half away
    /// from zero.
    pub fn mean_demand(&self) -> Vec<u64> {
        (0..self.width())
            .map(|i| {
                let m: f64 = self
                    .demands
                    .iter()
                    .zip(&self.probabilities)
                    .map(|(row, p)| p * row[i] as f64)
                    .sum();
                m.round().max(0.0) as u64
            })
            .collect()
    }

    /// Merges scenarios with identical demand rows, keeping first-seen
    /// order. Equal-probability inputs get `count / N` weights so that a set
    /// of `N` copies collapses to probability exactly 1.
    pub fn consolidated(&self) -> ScenarioSet {
        let uniform = self
            .probabilities
            .iter()
            .all(|&p| p == self.probabilities[0]);
        let mut rows: Vec<Vec<u64>> = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        let mut mass: Vec<f64> = Vec::new();
        for (row, &p) in self.demands.iter().zip(&self.probabilities) {
            match rows.iter().position(|r| r == row) {
                Some(k) => {
                    counts[k] += 1;
                    mass[k] += p;
                }
                None => {
                    rows.push(row.clone());
                    counts.push(1);
                    mass.push(p);
                }
            }
        }
        let probabilities = if uniform {
            let n = self.len() as f64;
            counts.iter().map(|&c| c as f64 / n).collect()
        } else {
            mass
        };
        ScenarioSet {
            locations: self.locations.clone(),
            demands: rows,
            probabilities,
        }
    }

    /// Writes `scenario,probability,loc_<id>...`, one row per scenario.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["scenario".to_string(), "probability".to_string()];
        header.extend(self.locations.iter().map(|id| format!("loc_{id}")));
        w.write_record(&header)?;
        for (s, (row, p)) in self.demands.iter().zip(&self.probabilities).enumerate() {
            let mut rec = vec![s.to_string(), p.to_string()];
            rec.extend(row.iter().map(|d| d.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        if header.len() < 2 || &header[0] != "scenario" || &header[1] != "probability" {
            return Err(Error::Format(
                "scenario header must start with `scenario,probability`".into(),
            ));
        }
        let locations = header
            .iter()
            .skip(2)
            .map(|h| {
                h.strip_prefix("loc_")
                    .and_then(|id| id.parse::<ZoneId>().ok())
                    .ok_or_else(|| Error::Format(format!("bad location column `{h}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut demands = Vec::new();
        let mut probabilities = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let p: f64 = parse_field(&rec, 1)?;
            let row = (2..rec.len())
                .map(|k| parse_field::<u64>(&rec, k))
                .collect::<Result<Vec<_>>>()?;
            probabilities.push(p);
            demands.push(row);
        }
        Self::new(locations, demands, probabilities)
    }
}

/// Neumaier summation; keeps `N * (1/N)` within an ulp of 1 for large `N`.
fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, k: usize) -> Result<T> {
    rec.get(k)
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| Error::Format(format!("bad field {k} in record {:?}", rec.as_slice())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unnormalized_probabilities() {
        let err = ScenarioSet::new(vec![1], vec![vec![1], vec![2]], vec![0.5, 0.6]);
        assert!(err.is_err());
    }

    #[test]
    fn rejects_ragged_rows() {
        assert!(ScenarioSet::uniform(vec![1, 2], vec![vec![1, 2], vec![3]]).is_err());
    }

    #[test]
    fn consolidation_of_copies_is_exact() {
        for n in 1..40 {
            let set = ScenarioSet::uniform(vec![4], vec![vec![7]; n]).unwrap();
            let c = set.consolidated();
            assert_eq!(c.len(), 1);
            assert_eq!(c.probabilities(), &[1.0]);
        }
    }

    #[test]
    fn csv_round_trip() {
        let set = ScenarioSet::new(
            vec![7, 42],
            vec![vec![1, 2], vec![3, 0], vec![10, 11]],
            vec![0.2, 0.3, 0.5],
        )
        .unwrap();
        let mut buf = Vec::new();
        set.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("scenario,probability,loc_7,loc_42\n0,0.2,1,2\n"));
        assert_eq!(ScenarioSet::read_csv(buf.as_slice()).unwrap(), set);
    }

    #[test]
    fn mean_demand_rounds() {
        let set = ScenarioSet::uniform(vec![1, 2], vec![vec![1, 4], vec![2, 4]]).unwrap();
        assert_eq!(set.mean_demand(), vec![2, 4]);
    }
}

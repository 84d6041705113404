use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// A list of real values, written as `a,b,c` and/or `start:step:stop` ranges.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "Vec<f64>")]
pub struct Grid(pub Vec<f64>);

#[derive(Deserialize)]
#[serde(untagged)]
enum GridRepr {
    One(f64),
    Many(Vec<f64>),
    Text(String),
}

impl TryFrom<GridRepr> for Grid {
    type Error = String;

    fn try_from(repr: GridRepr) -> Result<Self, String> {
        match repr {
            GridRepr::One(v) => Ok(Grid(vec![v])),
            GridRepr::Many(v) => Ok(Grid(v)),
            GridRepr::Text(s) => s.parse(),
        }
    }
}

impl From<Grid> for Vec<f64> {
    fn from(grid: Grid) -> Self {
        grid.0
    }
}

fn decimals(text: &str) -> usize {
    text.split_once('.').map_or(0, |(_, frac)| frac.trim_end_matches(|c: char| !c.is_ascii_digit()).len())
}

fn number(text: &str) -> Result<f64, String> {
    text.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("{text:?} is not a finite number"))
}

/// Expands `start:step:stop`, inclusive of `stop` when it lies on the grid.
///
/// Values are rounded to the number of decimals written, so `0.1:0.1:0.3`
/// yields exactly `[0.1, 0.2, 0.3]`.
fn range(text: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    let [start, step, stop] = parts[..] else {
        return Err(format!("range {text:?} must read start:step:stop"));
    };
    let (a, h, b) = (number(start)?, number(step)?, number(stop)?);
    if h <= 0.0 || b < a {
        return Err(format!("range {text:?} needs a positive step and start ≤ stop"));
    }
    let places = decimals(start).max(decimals(step)).max(decimals(stop));
    let count = ((b - a) / h + 1e-9).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(format!("range {text:?} has too many points"));
    }
    Ok((0..count)
        .map(|i| {
            let v = a + i as f64 * h;
            format!("{v:.places$}").parse().expect("formatted float")
        })
        .collect())
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut values = Vec::new();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            if item.contains(':') {
                values.extend(range(item)?);
            } else {
                values.push(number(item)?);
            }
        }
        if values.is_empty() {
            return Err("empty grid".into());
        }
        Ok(Grid(values))
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.0.iter().map(f64::to_string).collect();
        f.write_str(&items.join(","))
    }
}

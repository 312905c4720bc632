//! Phase values on the command line and in config files.
//!
//! Accepted forms: plain radians (`1.5708`), multiples and fractions of pi
//! (`pi`, `-pi`, `2pi`, `3*pi/4`, `pi/2`) and degrees (`deg:90`).

use std::f64::consts::PI;

fn number(text: &str) -> Result<f64, String> {
    text.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("`{text}` is not a finite number"))
}

pub fn parse_phase(text: &str) -> Result<f64, String> {
    let t = text.trim();
    if let Some(deg) = t.strip_prefix("deg:") {
        return Ok(number(deg.trim())?.to_radians());
    }
    let lower = t.to_ascii_lowercase();
    let Some(at) = lower.find("pi") else {
        return number(t);
    };
    let (head, tail) = (&lower[..at], &lower[at + 2..]);
    let head = head.strip_suffix('*').unwrap_or(head);
    let factor = match head {
        "" | "+" => 1.0,
        "-" => -1.0,
        h => number(h).map_err(|_| format!("bad phase `{text}`"))?,
    };
    let divisor = match tail {
        "" => 1.0,
        d => {
            let d = d
                .strip_prefix('/')
                .ok_or_else(|| format!("bad phase `{text}`"))?;
            let d = number(d).map_err(|_| format!("bad phase `{text}`"))?;
            if d == 0.0 {
                return Err(format!("bad phase `{text}`: division by zero"));
            }
            d
        }
    };
    Ok(factor * PI / divisor)
}

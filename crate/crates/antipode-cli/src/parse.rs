use num_complex::Complex64 as C64;

/// Accepts `re`, `re,im`, `bi`, `a+bi`, `a-bi`, with `i` or `j`.
pub fn parse_complex(s: &str) -> Option<C64> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return None;
    }
    if let Some((re, im)) = s.split_once(',') {
        return Some(C64::new(re.parse().ok()?, im.parse().ok()?));
    }
    let Some(body) = s.strip_suffix('i').or_else(|| s.strip_suffix('j')) else {
        return Some(C64::new(s.parse().ok()?, 0.0));
    };
    // Split at the last sign that is not part of an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let coef = |t: &str| -> Option<f64> {
        match t {
            "" | "+" => Some(1.0),
            "-" => Some(-1.0),
            _ => t.parse().ok(),
        }
    };
    match split {
        Some(k) => Some(C64::new(body[..k].parse().ok()?, coef(&body[k..])?)),
        None => Some(C64::new(0.0, coef(body)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forms() {
        assert_eq!(parse_complex("1-6i"), Some(C64::new(1.0, -6.0)));
        assert_eq!(parse_complex("0.5 + 2i"), Some(C64::new(0.5, 2.0)));
        assert_eq!(parse_complex("-i"), Some(C64::new(0.0, -1.0)));
        assert_eq!(parse_complex("3"), Some(C64::new(3.0, 0.0)));
        assert_eq!(parse_complex("1e-3+1e-2i"), Some(C64::new(1e-3, 1e-2)));
        assert_eq!(parse_complex("2.5,-1"), Some(C64::new(2.5, -1.0)));
        assert_eq!(parse_complex("x"), None);
    }
}

use crate::error::ConfigError;

/// History lengths of the tagged components, geometrically spaced from
/// `l_min` to `l_max`. Rounding collisions are bumped by one so the
/// sequence stays strictly increasing.
pub fn geometric_lengths(l_min: usize, l_max: usize, num_tagged: usize) -> Result<Vec<usize>, ConfigError> {
    if num_tagged == 0 {
        return Err(ConfigError::new("num_tagged must be >= 1"));
    }
    if l_min == 0 {
        return Err(ConfigError::new("l_min must be >= 1"));
    }
    if l_max < l_min {
        return Err(ConfigError::new(format!("l_max {l_max} < l_min {l_min}")));
    }
    if num_tagged == 1 {
        return Ok(vec![l_min]);
    }
    let ratio = (l_max as f64 / l_min as f64).powf(1.0 / (num_tagged - 1) as f64);
    let mut out: Vec<usize> = Vec::with_capacity(num_tagged);
    for i in 0..num_tagged {
        let mut len = (l_min as f64 * ratio.powi(i as i32)).round() as usize;
        if let Some(&prev) = out.last() {
            if len <= prev {
                len = prev + 1;
            }
        }
        out.push(len);
    }
    Ok(out)
}

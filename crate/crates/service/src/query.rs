//! Query-string parsing. Every malformed value is a 422.

use std::collections::HashMap;
use std::str::FromStr;

use ccid_core::{FilterKind, FusionMethod, FusionParams, ReliableFilterSpec, Wavelet};

use crate::error::{ApiError, ApiResult};

pub type Query = HashMap<String, String>;

fn parse<T: FromStr>(query: &Query, key: &str) -> ApiResult<Option<T>> {
    query
        .get(key)
        .map(|raw| {
            raw.parse()
                .map_err(|_| ApiError::unprocessable(format!("invalid value {raw:?} for {key:?}")))
        })
        .transpose()
}

fn parse_bool(query: &Query, key: &str) -> ApiResult<Option<bool>> {
    query
        .get(key)
        .map(|raw| match raw.as_str() {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            _ => Err(ApiError::unprocessable(format!("invalid value {raw:?} for {key:?}"))),
        })
        .transpose()
}

/// Fusion parameters; `w` is required, everything else has defaults.
pub fn fusion_params(query: &Query) -> ApiResult<FusionParams> {
    let weight: f64 = parse(query, "w")?.ok_or_else(|| ApiError::unprocessable("missing fusion weight \"w\""))?;
    let mut params = FusionParams::new(parse::<FusionMethod>(query, "method")?.unwrap_or_default(), weight);
    if let Some(guided) = parse_bool(query, "guided")? {
        params.guided = guided;
    }
    if let Some(t) = parse(query, "threshold")? {
        params.threshold = t;
    }
    if let Some(a) = parse(query, "mask_scale")? {
        params.mask_scale = a;
    }
    if let Some(eps) = parse(query, "mask_eps")? {
        params.mask_eps = eps;
    }
    if let Some(levels) = parse(query, "levels")? {
        params.levels = levels;
    }
    if let Some(wavelet) = parse::<Wavelet>(query, "wavelet")? {
        params.wavelet = wavelet;
    }
    params.validate()?;
    Ok(params)
}

/// Reliable filter chosen by `filter=<kind>`, default parameters otherwise.
pub fn filter_spec(query: &Query) -> ApiResult<Option<ReliableFilterSpec>> {
    let Some(kind) = parse::<FilterKind>(query, "filter")? else {
        return Ok(None);
    };
    let mut spec = ReliableFilterSpec::with_kind(kind);
    if let Some(sigma) = parse(query, "sigma")? {
        spec.gaussian_sigma = sigma;
    }
    spec.validate()?;
    Ok(Some(spec))
}

pub fn threshold(query: &Query) -> ApiResult<f64> {
    let t = parse(query, "threshold")?.unwrap_or(FusionParams::default().threshold);
    if !(0.0..=1.0).contains(&t) {
        return Err(ApiError::unprocessable(format!("threshold {t} outside [0, 1]")));
    }
    Ok(t)
}

pub fn string<'a>(query: &'a Query, key: &str) -> Option<&'a str> {
    query.get(key).map(String::as_str)
}

pub fn number<T: FromStr>(query: &Query, key: &str) -> ApiResult<Option<T>> {
    parse(query, key)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(pairs: &[(&str, &str)]) -> Query {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn fusion_defaults_and_overrides() {
        let p = fusion_params(&q(&[("w", "0.3")])).unwrap();
        assert_eq!((p.method, p.weight, p.guided), (FusionMethod::Dct, 0.3, false));
        let p = fusion_params(&q(&[("w", "1"), ("method", "dwt_corr"), ("guided", "true"), ("levels", "2")])).unwrap();
        assert_eq!((p.method, p.guided, p.levels), (FusionMethod::DwtCorr, true, 2));
    }

    #[test]
    fn bad_values_are_unprocessable() {
        for bad in [
            q(&[]),
            q(&[("w", "abc")]),
            q(&[("w", "1.5")]),
            q(&[("w", "0.5"), ("method", "fft")]),
            q(&[("w", "0.5"), ("guided", "maybe")]),
            q(&[("w", "0.5"), ("threshold", "-1")]),
        ] {
            assert_eq!(fusion_params(&bad).unwrap_err().status, 422);
        }
    }
}

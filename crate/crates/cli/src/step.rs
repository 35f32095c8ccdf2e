//! Step-law specifications.
//!
//! ```text
//! law     := pair ("," pair)* | "u{" offsets "}"
//! pair    := offset ":" weight
//! offsets := offset ("," offset)*
//! ```
//!
//! Offsets are integers, weights positive integers; whitespace is ignored.

use cdg_core::StepLaw;

use crate::error::CliError;

fn parse_int<T: std::str::FromStr>(tok: &str, what: &str, spec: &str) -> Result<T, CliError> {
    tok.parse()
        .map_err(|_| CliError::Validation(format!("step law {spec:?}: bad {what} {tok:?}")))
}

pub fn parse_step_law(spec: &str) -> Result<StepLaw, CliError> {
    let compact: String = spec.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(CliError::Validation("step law is empty".into()));
    }
    let atoms: Vec<(i64, u64)> = if let Some(rest) = compact.strip_prefix("u{") {
        let inner = rest.strip_suffix('}').ok_or_else(|| {
            CliError::Validation(format!("step law {spec:?}: missing closing '}}'"))
        })?;
        inner
            .split(',')
            .map(|tok| parse_int(tok, "offset", spec).map(|b| (b, 1)))
            .collect::<Result<_, _>>()?
    } else {
        compact
            .split(',')
            .map(|pair| {
                let (b, w) = pair.split_once(':').ok_or_else(|| {
                    CliError::Validation(format!("step law {spec:?}: expected offset:weight, got {pair:?}"))
                })?;
                Ok((parse_int(b, "offset", spec)?, parse_int(w, "weight", spec)?))
            })
            .collect::<Result<_, CliError>>()?
    };
    StepLaw::new(atoms).map_err(CliError::Core)
}

/// Inverse of [`parse_step_law`] up to formatting.
pub fn render_step_law(step: &StepLaw) -> String {
    step.to_string()
}

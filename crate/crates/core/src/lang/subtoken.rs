//! Sub-token splitting on camel-case and underscore boundaries.

/// Split a code token into lowercase sub-tokens.
///
/// Boundaries are underscores (dropped) and lower-or-digit to upper camel
/// transitions, so digits stay attached to their run: `"utf8Name"` gives
/// `["utf8", "name"]`. Tokens made only of underscores degenerate to a
/// single `"unk"` part, keeping the output non-empty.
pub fn split_subtokens(token: &str) -> Vec<String> {
    assert!(!token.is_empty(), "split_subtokens needs a non-empty token");
    let mut parts: Vec<String> = Vec::new();
    let mut current = String::new();
    let mut prev: Option<char> = None;
    for c in token.chars() {
        if c == '_' {
            if !current.is_empty() {
                parts.push(current.to_lowercase());
                current = String::new();
            }
            prev = Some(c);
            continue;
        }
        if c.is_ascii_uppercase() {
            if let Some(p) = prev {
                if (p.is_ascii_lowercase() || p.is_ascii_digit()) && !current.is_empty() {
                    parts.push(current.to_lowercase());
                    current = String::new();
                }
            }
        }
        current.push(c);
        prev = Some(c);
    }
    if !current.is_empty() {
        parts.push(current.to_lowercase());
    }
    if parts.is_empty() {
        parts.push("unk".to_string());
    }
    parts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn camel_case() {
        assert_eq!(split_subtokens("getFooBar"), ["get", "foo", "bar"]);
        assert_eq!(split_subtokens("sourceExcerpt"), ["source", "excerpt"]);
    }

    #[test]
    fn underscores() {
        assert_eq!(split_subtokens("max_value"), ["max", "value"]);
        assert_eq!(split_subtokens("__x__"), ["x"]);
    }

    #[test]
    fn digits_stay_with_their_run() {
        assert_eq!(split_subtokens("utf8Name"), ["utf8", "name"]);
        assert_eq!(split_subtokens("max2"), ["max2"]);
    }

    #[test]
    fn operators_and_literals_are_single_parts() {
        assert_eq!(split_subtokens("<="), ["<="]);
        assert_eq!(split_subtokens("0"), ["0"]);
        assert_eq!(split_subtokens("true"), ["true"]);
    }

    #[test]
    fn consecutive_capitals_do_not_split() {
        assert_eq!(split_subtokens("HTTPServer"), ["httpserver"]);
    }

    #[test]
    fn idempotent_on_joined_output() {
        for token in ["getFooBar", "max_value", "utf8Name", "counter"] {
            let once = split_subtokens(token);
            let joined = once.join("_");
            assert_eq!(split_subtokens(&joined), once);
        }
    }

    #[test]
    fn degenerate_all_underscores() {
        assert_eq!(split_subtokens("_"), ["unk"]);
    }
}

/// Normalizes a domain or URL to a bare lowercase host: scheme, userinfo,
/// port, path, query, fragment, trailing dots and every leading `www.` are
/// removed. Idempotent.
pub fn normalize_domain(raw: &str) -> String {
    let mut current = normalize_pass(raw);
    loop {
        let next = normalize_pass(&current);
        if next == current {
            return current;
        }
        current = next;
    }
}

fn normalize_pass(raw: &str) -> String {
    let mut s = raw.trim().to_ascii_lowercase();
    if let Some(pos) = s.find("://") {
        s.drain(..pos + 3);
    } else if let Some(rest) = s.strip_prefix("//") {
        s = rest.to_string();
    }
    if let Some(end) = s.find(['/', '?', '#']) {
        s.truncate(end);
    }
    if let Some(at) = s.rfind('@') {
        s.drain(..=at);
    }
    if let Some(colon) = s.find(':') {
        s.truncate(colon);
    }
    let mut host = s.trim().trim_end_matches('.');
    while let Some(rest) = host.strip_prefix("www.") {
        host = rest;
    }
    host.to_string()
}

/// Host part of a URL, normalized; `None` when nothing host-like remains.
pub fn host_of(url: &str) -> Option<String> {
    let host = normalize_domain(url);
    if host.is_empty() || !host.contains('.') {
        None
    } else {
        Some(host)
    }
}

/// Suffixes of a host from longest to shortest at label boundaries:
/// `a.b.com` yields `a.b.com`, `b.com`, `com`.
pub(crate) fn suffixes(host: &str) -> impl Iterator<Item = &str> {
    std::iter::once(host).chain(host.match_indices('.').map(move |(i, _)| &host[i + 1..]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn strips_scheme_www_path_and_port() {
        assert_eq!(normalize_domain("https://www.Example.com/a/b?c=1"), "example.com");
        assert_eq!(normalize_domain("http://news.example.co.uk:8080/x"), "news.example.co.uk");
        assert_eq!(normalize_domain("WWW.www.foo.org."), "foo.org");
        assert_eq!(normalize_domain("//cdn.bar.net/p"), "cdn.bar.net");
        assert_eq!(normalize_domain("user:pw@host.io/z"), "host.io");
    }

    #[test]
    fn host_requires_a_dot() {
        assert_eq!(host_of("localhost"), None);
        assert_eq!(host_of(""), None);
        assert_eq!(host_of("https://t.co/abc"), Some("t.co".to_string()));
    }

    #[test]
    fn suffix_walk() {
        let s: Vec<_> = suffixes("a.b.com").collect();
        assert_eq!(s, vec!["a.b.com", "b.com", "com"]);
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent(raw in "[a-zA-Z0-9:/.@?# w-]{0,40}") {
            let once = normalize_domain(&raw);
            prop_assert_eq!(normalize_domain(&once), once.clone());
        }
    }
}

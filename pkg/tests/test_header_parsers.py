from headaudit.header_parsers import (
    PROBE_ORIGIN,
    build_cors_evidence,
    classify_referrer_policy,
    classify_xss_protection,
    parse_csp,
    parse_hpkp,
    parse_hsts,
    parse_set_cookie,
    parse_simple,
    serialize_csp,
    serialize_hsts,
    serialize_set_cookie,
)


class TestCsp:
    def test_basic_directives(self):
        policy = parse_csp("default-src 'self'; script-src 'self' cdn.example.com")
        assert policy.parse_ok
        assert policy.directives["default-src"] == ["'self'"]
        assert policy.directives["script-src"] == ["'self'", "cdn.example.com"]

    def test_first_directive_occurrence_wins(self):
        policy = parse_csp("script-src 'self'; script-src 'unsafe-inline'")
        assert policy.directives["script-src"] == ["'self'"]
        assert not policy.has_unsafe_inline

    def test_unsafe_inline_flag(self):
        assert parse_csp("script-src 'unsafe-inline'").has_unsafe_inline
        assert parse_csp("SCRIPT-SRC 'UNSAFE-INLINE'").has_unsafe_inline

    def test_unsafe_eval_flag(self):
        assert parse_csp("default-src 'unsafe-eval'").has_unsafe_eval

    def test_wildcard_script(self):
        assert parse_csp("script-src *").has_wildcard_script_or_default

    def test_no_script_constraint_counts_as_wildcard(self):
        # Neither script-src nor default-src: scripts are unconstrained.
        assert parse_csp("img-src 'self'").has_wildcard_script_or_default

    def test_default_src_none(self):
        policy = parse_csp("default-src 'none'")
        assert policy.default_src_none
        assert not policy.has_wildcard_script_or_default

    def test_script_src_falls_back_to_default(self):
        policy = parse_csp("default-src 'self'")
        assert policy.effective_script_sources() == ["'self'"]

    def test_empty_policy_not_ok(self):
        assert not parse_csp("").parse_ok
        assert not parse_csp(" ; ; ").parse_ok

    def test_roundtrip(self):
        raw = "default-src 'none'; script-src 'self' cdn.example.com"
        assert parse_csp(serialize_csp(parse_csp(raw))).directives == parse_csp(raw).directives


class TestHsts:
    def test_full_directive(self):
        h = parse_hsts("max-age=31536000; includeSubDomains; preload")
        assert h.parse_ok
        assert h.max_age == 31536000
        assert h.include_subdomains and h.preload

    def test_max_age_only(self):
        h = parse_hsts("max-age=300")
        assert h.parse_ok and h.max_age == 300
        assert not h.include_subdomains and not h.preload

    def test_case_insensitive_tokens(self):
        h = parse_hsts("MAX-AGE=10; INCLUDESUBDOMAINS; PRELOAD")
        assert h.parse_ok and h.include_subdomains and h.preload

    def test_quoted_max_age(self):
        assert parse_hsts('max-age="600"').max_age == 600

    def test_missing_max_age_is_invalid(self):
        assert not parse_hsts("includeSubDomains").parse_ok

    def test_duplicate_max_age_is_invalid(self):
        assert not parse_hsts("max-age=1; max-age=2").parse_ok

    def test_garbage_is_invalid(self):
        assert not parse_hsts("max-age=soon").parse_ok

    def test_unknown_tokens_ignored(self):
        assert parse_hsts("max-age=60; future-flag").parse_ok

    def test_roundtrip(self):
        h = parse_hsts("max-age=31536000; includeSubDomains")
        assert parse_hsts(serialize_hsts(h)) == h


class TestSetCookie:
    def test_bare_session_cookie(self):
        c = parse_set_cookie("sid=abc123")
        assert c.name == "sid"
        assert c.is_session
        assert not c.secure and not c.http_only and c.same_site is None

    def test_all_attributes(self):
        c = parse_set_cookie("sid=a; Secure; HttpOnly; SameSite=Strict; Path=/")
        assert c.secure and c.http_only and c.same_site == "Strict"

    def test_attribute_case_insensitive(self):
        c = parse_set_cookie("sid=a; SECURE; httponly; samesite=lax")
        assert c.secure and c.http_only and c.same_site == "Lax"

    def test_max_age_makes_persistent(self):
        assert not parse_set_cookie("sid=a; Max-Age=3600").is_session

    def test_expires_makes_persistent(self):
        c = parse_set_cookie("sid=a; Expires=Wed, 21 Oct 2026 07:28:00 GMT")
        assert not c.is_session

    def test_invalid_samesite_ignored(self):
        assert parse_set_cookie("sid=a; SameSite=Whatever").same_site is None

    def test_roundtrip(self):
        for raw in ["sid=a", "sid=a; Secure; HttpOnly; SameSite=Lax", "t=1; Max-Age=9; Secure"]:
            c = parse_set_cookie(raw)
            assert parse_set_cookie(serialize_set_cookie(c)) == c


class TestCorsEvidence:
    def test_absent_everywhere(self):
        e = build_cors_evidence(None, None, None, None)
        assert e.acao is None and not e.reflects_arbitrary_origin

    def test_star_is_not_reflection(self):
        e = build_cors_evidence("*", None, "*", None)
        assert e.acao == "*" and not e.reflects_arbitrary_origin

    def test_probe_echo_detected(self):
        e = build_cors_evidence(None, None, PROBE_ORIGIN, "true")
        assert e.reflects_arbitrary_origin and e.allow_credentials

    def test_fixed_origin_not_reflection(self):
        e = build_cors_evidence(None, None, "https://partner.example.com", None)
        assert not e.reflects_arbitrary_origin

    def test_credentials_from_main_response(self):
        e = build_cors_evidence("*", "true", PROBE_ORIGIN, None)
        assert e.allow_credentials


class TestHpkp:
    def test_valid_with_backup_pin(self):
        h = parse_hpkp('pin-sha256="a"; pin-sha256="b"; max-age=5184000')
        assert h.present and h.parse_ok
        assert h.pin_count == 2 and h.max_age == 5184000

    def test_single_pin(self):
        assert parse_hpkp('pin-sha256="a"; max-age=60').pin_count == 1

    def test_missing_max_age(self):
        assert parse_hpkp('pin-sha256="a"; pin-sha256="b"').max_age is None

    def test_garbage(self):
        assert not parse_hpkp("what even is this").parse_ok


class TestSimpleHeaders:
    def test_xcto(self):
        assert parse_simple("X-Content-Type-Options", "nosniff").classification == "valid"
        assert parse_simple("X-Content-Type-Options", " NoSniff ").classification == "valid"
        assert parse_simple("X-Content-Type-Options", "sniff").classification == "invalid"

    def test_xfo(self):
        assert parse_simple("X-Frame-Options", "DENY").classification == "valid"
        assert parse_simple("X-Frame-Options", "sameorigin").classification == "valid"
        assert parse_simple("X-Frame-Options", "ALLOW-FROM https://a.test").classification == "valid"
        assert parse_simple("X-Frame-Options", "ALLOWALL").classification == "invalid"

    def test_referrer_classes(self):
        assert classify_referrer_policy("no-referrer") == "restrictive"
        assert classify_referrer_policy("strict-origin-when-cross-origin") == "restrictive"
        assert classify_referrer_policy("no-referrer-when-downgrade") == "neutral"
        assert classify_referrer_policy("unsafe-url") == "leaky"
        assert classify_referrer_policy("") == "neutral"
        assert classify_referrer_policy("made-up-token") == "leaky"

    def test_referrer_fallback_list_last_recognized_wins(self):
        assert classify_referrer_policy("unsafe-url, no-referrer") == "restrictive"
        assert classify_referrer_policy("no-referrer, unsafe-url") == "leaky"

    def test_xss_protection(self):
        assert classify_xss_protection("1") == "enabled"
        assert classify_xss_protection("1; mode=block") == "enabled"
        assert classify_xss_protection("1 ;mode=block") == "enabled"
        assert classify_xss_protection("0") == "disabled"
        assert classify_xss_protection("2") == "invalid"

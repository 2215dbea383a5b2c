from patlas import registry


def test_iso_codes_present():
    for code in ["US", "CN", "DE", "FR", "JP", "KR", "TW", "NO"]:
        assert registry.is_country(code)


def test_eu27_size_and_membership():
    assert len(registry.EU27) == 27
    assert "DE" in registry.EU27
    assert "GB" not in registry.EU27  # post-2020 list
    assert registry.EU27 <= registry.ISO_ALPHA2


def test_pseudo_country_recognized_but_not_iso():
    assert not registry.is_country("EU")
    assert registry.is_recognized("EU")
    assert not registry.is_recognized("XX")


def test_load_members(tmp_path):
    f = tmp_path / "members.txt"
    f.write_text("# comment\nde\nFR\n\n  NL  \n")
    assert registry.load_members(f) == frozenset({"DE", "FR", "NL"})

import math

import pytest

from angular_momentum import HalfInt
from atomic_data import (
    RB87_D1,
    Manifold,
    collapsed_line,
    enumerate_states,
    load_line,
    parse_line_file,
    same_ground_manifold,
    transition_frequency,
)
from errors import DataFileError, DomainError, UnknownLineError

TWO_PI = 2 * math.pi


def test_rb87_d1_constants():
    assert RB87_D1.nuclear_spin == HalfInt.of("3/2")
    assert RB87_D1.ground_J == HalfInt.of("1/2")
    assert RB87_D1.excited_J == HalfInt.of("1/2")
    assert RB87_D1.ground_splitting == pytest.approx(TWO_PI * 6.834682610904290e9, rel=1e-12)
    assert RB87_D1.excited_splitting == pytest.approx(TWO_PI * 814.48e6, rel=1e-9)
    assert RB87_D1.line_center == pytest.approx(TWO_PI * 377.107463380e12)


def test_transition_frequency_adds_the_hyperfine_offsets():
    expected = TWO_PI * (377.107463380e12 - 509.05e6 - 2.563005979089109e9)
    assert transition_frequency(RB87_D1, 2, 1) == pytest.approx(expected, rel=1e-14)


def test_enumerate_states_orders_by_F_then_m():
    ground = enumerate_states(RB87_D1, Manifold.GROUND)
    excited = enumerate_states(RB87_D1, "excited")
    assert len(ground) == 8
    assert len(excited) == 8
    assert [(str(s.F), str(s.m_F)) for s in ground[:4]] == [("1", "-1"), ("1", "0"), ("1", "1"), ("2", "-2")]
    assert all(s.manifold is Manifold.EXCITED for s in excited)


def test_offset_of_missing_level_raises():
    with pytest.raises(DomainError):
        RB87_D1.offset(Manifold.GROUND, 3)


def test_load_line_is_case_insensitive():
    assert load_line("Rb87", "d1") is RB87_D1


def test_bundled_d2_shares_the_d1_ground_manifold():
    d2 = load_line("rb87", "D2")
    assert d2.label == "D2"
    assert [str(F) for F in d2.excited_F] == ["0", "1", "2", "3"]
    assert len(enumerate_states(d2, Manifold.EXCITED)) == 16
    assert same_ground_manifold(RB87_D1, d2)


def test_unknown_line():
    with pytest.raises(UnknownLineError):
        load_line("rb87", "D9")


def test_data_dir_from_environment(tmp_path, monkeypatch, line_file_text):
    (tmp_path / "testium_L1.txt").write_text(line_file_text.format(species="testium", line="L1"), encoding="utf-8")
    monkeypatch.setenv("ASGEM_DATA_DIR", str(tmp_path))
    line = load_line("testium", "L1")
    assert line.species.name == "testium"
    assert line.reduced_dipole == pytest.approx(RB87_D1.reduced_dipole)
    assert same_ground_manifold(RB87_D1, line)


def test_species_and_line_default_to_the_file_stem(tmp_path, line_file_text):
    text = "\n".join(
        row for row in line_file_text.format(species="x", line="y").splitlines()
        if not row.startswith(("species", "line ="))
    )
    path = tmp_path / "k39_D1.txt"
    path.write_text(text, encoding="utf-8")
    line = parse_line_file(path)
    assert (line.species.name, line.label) == ("k39", "D1")


def test_unknown_key_is_reported_with_its_line(tmp_path, line_file_text):
    text = line_file_text.format(species="bad", line="L1").replace("line = L1\n", "line = L1\nhyperfine_A = 3 MHz\n")
    path = tmp_path / "bad_L1.txt"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(DataFileError) as info:
        parse_line_file(path)
    assert info.value.lineno == 4
    assert "hyperfine_A" in str(info.value)


def test_missing_keys(tmp_path):
    path = tmp_path / "thin_L1.txt"
    path.write_text("nuclear_spin = 3/2\nground_J = 1/2\n", encoding="utf-8")
    with pytest.raises(DataFileError, match="missing keys"):
        parse_line_file(path)


def test_offsets_must_be_centroid_referenced(tmp_path, line_file_text):
    text = line_file_text.format(species="off", line="L1").replace("305.43 MHz", "405.43 MHz")
    path = tmp_path / "off_L1.txt"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(DataFileError, match="centroid"):
        parse_line_file(path)


def test_bad_half_integer_in_file(tmp_path, line_file_text):
    text = line_file_text.format(species="odd", line="L1").replace("nuclear_spin = 3/2", "nuclear_spin = 4/3")
    path = tmp_path / "odd_L1.txt"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(DataFileError) as info:
        parse_line_file(path)
    assert info.value.lineno == 5


def test_collapsed_line_has_no_hyperfine_structure():
    two_level = collapsed_line(RB87_D1)
    assert two_level.nuclear_spin == HalfInt(0)
    assert [str(F) for F in two_level.ground_F] == ["1/2"]
    assert len(enumerate_states(two_level, Manifold.GROUND)) == 2
    assert transition_frequency(two_level, "1/2", "1/2") == RB87_D1.line_center

import pytest

from fecapsim.units import UnitError, from_si, known_unit, to_si


CASES = [
    # (value, unit, SI value)
    (9.8, "nm", 9.8e-9),
    (1.0, "um", 1e-6),
    (625.0, "um2", 625e-12),
    (1.0, "cm2", 1e-4),
    (10.0, "us", 1e-5),
    (1.0, "ms", 1e-3),
    (10.0, "ns", 1e-8),
    (3.0, "V", 3.0),
    (10.0, "mV", 1e-2),
    (250.0, "nA", 250e-9),
    (25.0, "pA", 25e-12),
    (1.0, "kHz", 1e3),
    (27.0, "uC/cm2", 0.27),
    (0.2, "MV/cm", 2e7),
    (5.0, "kV/cm", 5e5),
    (1.4e22, "cm-3", 1.4e28),
    (1.05, "eV", 1.05 * 1.602176634e-19),
    (15.0, "cm2/Vs", 15e-4),
]


@pytest.mark.parametrize("value,unit,si", CASES)
def test_to_si(value, unit, si):
    assert to_si(value, unit) == pytest.approx(si, rel=1e-12)


@pytest.mark.parametrize("value,unit,si", CASES)
def test_round_trip(value, unit, si):
    assert from_si(to_si(value, unit), unit) == pytest.approx(value, rel=1e-12)


def test_temperature_offset():
    assert to_si(21.0, "C") == pytest.approx(294.15)
    assert to_si(294.15, "K") == 294.15
    assert from_si(358.15, "C") == pytest.approx(85.0)


def test_unknown_unit():
    with pytest.raises(UnitError):
        to_si(1.0, "furlong")
    with pytest.raises(UnitError):
        from_si(1.0, "lightyear")
    assert known_unit("uC/cm2")
    assert not known_unit("furlong")

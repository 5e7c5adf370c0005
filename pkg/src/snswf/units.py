"""Frequency-unit boundary: Hz internally, cycles per minute at the API."""

CPM_PER_HZ = 60.0


def cpm_to_hz(f_cpm: float) -> float:
    return f_cpm / CPM_PER_HZ


def hz_to_cpm(f_hz: float) -> float:
    return f_hz * CPM_PER_HZ

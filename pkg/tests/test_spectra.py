import io

import numpy as np
import pytest

from conftest import synth_spectrum
from strainforge.errors import (
    DuplicateAbscissa,
    EmptyRequest,
    InvalidParameter,
    NoSingleEmitters,
    ParseError,
)
from strainforge.spectra import (
    Peak,
    Spectrum,
    batch_gss_stats,
    classify_and_extract,
    detect_peaks,
    load_spectrum,
    pool_transitions,
    write_spectrum,
)

SPEED_OF_LIGHT_M_S = 299792458.0


def csv_of(rows, header=None):
    lines = ([header] if header else []) + [f"{x},{y}" for x, y in rows]
    return io.StringIO("\n".join(lines) + "\n")


def simple_rows(n=20, f0=406000.0, df=1.0):
    return [(f0 + i * df, 10.0 + (i % 3)) for i in range(n)]


def peak_at(center, height=100.0, prominence=50.0, width=10.0):
    return Peak(center_ghz=center, height=height, prominence=prominence,
                width_ghz=width)


class TestLoadSpectrum:
    def test_plain_two_columns(self):
        rows = simple_rows()
        s = load_spectrum(csv_of(rows))
        assert len(s) == len(rows)
        assert s.frequencies_ghz[0] == 406000.0

    def test_header_frequency_ghz(self):
        s = load_spectrum(csv_of(simple_rows(), header="frequency_ghz,intensity"))
        assert len(s) == 20
        assert s.metadata["axis"] == "frequency_ghz"

    def test_header_frequency_thz(self):
        rows = [(406.0 + 0.001 * i, 5.0) for i in range(20)]
        s = load_spectrum(csv_of(rows, header="frequency_thz,intensity"))
        assert s.frequencies_ghz[0] == pytest.approx(406000.0, rel=1e-12)

    def test_wavelength_header_converts_and_sorts(self):
        # ascending wavelength means descending frequency
        rows = [(736.0 + 0.01 * i, 5.0 + i) for i in range(20)]
        s = load_spectrum(csv_of(rows, header="wavelength_nm,intensity"))
        assert np.all(np.diff(s.frequencies_ghz) > 0)
        expected_max = SPEED_OF_LIGHT_M_S / 736.0
        assert s.frequencies_ghz[-1] == pytest.approx(expected_max, rel=1e-12)
        assert s.metadata["converted"] == "wavelength_nm -> frequency_ghz"
        # intensity stays paired with its original wavelength
        assert s.intensities[-1] == 5.0

    def test_descending_input_equals_ascending(self):
        rows = simple_rows()
        up = load_spectrum(csv_of(rows))
        down = load_spectrum(csv_of(rows[::-1]))
        assert np.array_equal(up.frequencies_ghz, down.frequencies_ghz)
        assert np.array_equal(up.intensities, down.intensities)

    def test_non_numeric_row_names_line(self):
        rows = simple_rows()
        text = "\n".join(f"{x},{y}" for x, y in rows[:7])
        text += "\nnot_a_number,5.0\n"
        text += "\n".join(f"{x},{y}" for x, y in rows[7:])
        with pytest.raises(ParseError, match="line 8"):
            load_spectrum(io.StringIO(text))

    def test_wrong_column_count(self):
        with pytest.raises(ParseError, match="line 2"):
            load_spectrum(io.StringIO("1.0,2.0\n3.0,4.0,5.0\n"))

    def test_duplicate_frequency(self):
        rows = simple_rows()
        rows[5] = rows[4]
        with pytest.raises(DuplicateAbscissa):
            load_spectrum(csv_of(rows))

    def test_negative_intensity_rejected(self):
        rows = simple_rows()
        rows[3] = (rows[3][0], -1.0)
        with pytest.raises(ParseError, match="line 4"):
            load_spectrum(csv_of(rows))

    def test_too_few_points(self):
        with pytest.raises(ParseError):
            load_spectrum(csv_of(simple_rows(10)))

    def test_unknown_header(self):
        with pytest.raises(ParseError, match="line 1"):
            load_spectrum(csv_of(simple_rows(), header="energy_ev,intensity"))

    def test_round_trip_bit_identical(self, tmp_path):
        rng = np.random.default_rng(3)
        s = synth_spectrum(rng, [406500.0, 406800.0], label="a.csv")
        path = tmp_path / "spec.csv"
        write_spectrum(s, path)
        back = load_spectrum(path)
        assert np.array_equal(back.frequencies_ghz, s.frequencies_ghz)
        assert np.array_equal(back.intensities, s.intensities)


class TestDetectPeaks:
    def test_single_gaussian_line(self):
        rng = np.random.default_rng(11)
        s = synth_spectrum(rng, [406700.0], fwhm_ghz=30.0, snr=30.0,
                           shape="gaussian")
        peaks = detect_peaks(s)
        assert len(peaks) == 1
        bin_width = s.frequencies_ghz[1] - s.frequencies_ghz[0]
        assert abs(peaks[0].center_ghz - 406700.0) <= bin_width

    def test_flat_trace_has_no_peaks(self):
        freqs = np.linspace(0.0, 100.0, 64)
        s = Spectrum(freqs, np.full(64, 7.0))
        assert detect_peaks(s) == []

    def test_all_zero_trace(self):
        freqs = np.linspace(0.0, 100.0, 64)
        s = Spectrum(freqs, np.zeros(64))
        assert detect_peaks(s) == []

    def test_four_lorentzians_at_known_centers(self):
        rng = np.random.default_rng(21)
        centers = [406600.0, 406650.0, 406700.0, 406750.0]
        fwhm = 12.0
        s = synth_spectrum(rng, centers, fwhm_ghz=fwhm, snr=20.0,
                           f_lo=406400.0, f_hi=406950.0, n_points=1200)
        peaks = detect_peaks(s)
        assert len(peaks) == 4
        for p, c in zip(peaks, centers):
            assert abs(p.center_ghz - c) <= fwhm / 2

    def test_prominence_is_relative_to_scale(self):
        rng = np.random.default_rng(31)
        s = synth_spectrum(rng, [406500.0, 406900.0], fwhm_ghz=25.0, snr=25.0)
        scaled = Spectrum(s.frequencies_ghz, s.intensities * 137.0)
        assert len(detect_peaks(s)) == len(detect_peaks(scaled)) == 2

    def test_mirror_symmetry(self):
        rng = np.random.default_rng(41)
        s = synth_spectrum(rng, [406450.0, 406980.0], fwhm_ghz=25.0, snr=25.0)
        f0, f1 = s.frequencies_ghz[0], s.frequencies_ghz[-1]
        mirrored = Spectrum(
            (f0 + f1) - s.frequencies_ghz[::-1], s.intensities[::-1]
        )
        a = detect_peaks(s)
        b = detect_peaks(mirrored)
        assert len(a) == len(b)
        mirrored_centers = sorted((f0 + f1) - p.center_ghz for p in b)
        for p, m in zip(a, mirrored_centers):
            assert p.center_ghz == pytest.approx(m, abs=1e-6)

    def test_window_validation(self):
        rng = np.random.default_rng(51)
        s = synth_spectrum(rng, [406700.0])
        with pytest.raises(InvalidParameter):
            detect_peaks(s, smoothing_window=4)
        with pytest.raises(InvalidParameter):
            detect_peaks(s, smoothing_window=len(s) + 1)
        with pytest.raises(InvalidParameter):
            detect_peaks(s, min_prominence=0.0)

    def test_peaks_sorted_with_positive_prominence(self):
        rng = np.random.default_rng(61)
        s = synth_spectrum(rng, [406500.0, 406700.0, 406900.0], fwhm_ghz=20.0)
        peaks = detect_peaks(s)
        centers = [p.center_ghz for p in peaks]
        assert centers == sorted(centers)
        assert all(p.prominence > 0 for p in peaks)
        assert all(p.width_ghz > 0 for p in peaks)


class TestClassifyAndExtract:
    def test_two_lines_subtraction(self):
        a = classify_and_extract([peak_at(406600.0), peak_at(406650.0)])
        assert a.is_single_emitter
        assert a.gss_ghz == pytest.approx(50.0, rel=1e-12)

    def test_six_peaks_is_multi_emitter(self):
        peaks = [peak_at(406500.0 + 40 * i) for i in range(6)]
        a = classify_and_extract(peaks)
        assert not a.is_single_emitter
        assert a.gss_ghz is None

    def test_single_peak_has_no_gss(self):
        a = classify_and_extract([peak_at(406600.0)])
        assert a.is_single_emitter
        assert a.gss_ghz is None

    def test_no_peaks_not_single(self):
        a = classify_and_extract([])
        assert not a.is_single_emitter
        assert a.gss_ghz is None

    def test_gss_invariant_under_extra_high_lines(self):
        base = [peak_at(406600.0), peak_at(406650.0)]
        for extra in ([406800.0], [406800.0, 406900.0]):
            peaks = base + [peak_at(c) for c in extra]
            a = classify_and_extract(peaks)
            assert a.is_single_emitter
            assert a.gss_ghz == pytest.approx(50.0, rel=1e-12)

    def test_unsorted_input_is_sorted(self):
        a = classify_and_extract([peak_at(406650.0), peak_at(406600.0)])
        assert a.gss_ghz == pytest.approx(50.0, rel=1e-12)


class TestPoolTransitions:
    def test_identical_single_line_spectra_concentrate(self):
        rng = np.random.default_rng(71)
        one = synth_spectrum(rng, [406700.0], fwhm_ghz=20.0, snr=30.0,
                             batch_tag="pre")
        batch = [one] * 8
        pooled = pool_transitions(batch)
        hist = pooled["pre"]
        assert hist.n_peaks == 8
        mass = hist.density * np.diff(hist.edges_ghz)
        assert mass.max() == pytest.approx(1.0, abs=1e-9)

    def test_wider_batch_has_wider_histogram(self):
        rng = np.random.default_rng(81)
        tight, spread = [], []
        for i in range(24):
            c = 406700.0 + 10.0 * rng.standard_normal()
            tight.append(synth_spectrum(rng, [c], batch_tag="a", snr=30.0))
            c = 406700.0 + 50.0 * rng.standard_normal()
            spread.append(synth_spectrum(rng, [c], batch_tag="b", snr=30.0))
        pooled = pool_transitions(tight + spread)

        def hist_std(h):
            mids = 0.5 * (h.edges_ghz[:-1] + h.edges_ghz[1:])
            w = h.density * np.diff(h.edges_ghz)
            mean = np.sum(mids * w)
            return np.sqrt(np.sum(w * (mids - mean) ** 2))

        assert hist_std(pooled["b"]) >= 4.0 * hist_std(pooled["a"])

    def test_empty_batch(self):
        with pytest.raises(EmptyRequest):
            pool_transitions([])


class TestBatchGssStats:
    def test_known_values_match_direct_arithmetic(self):
        rng = np.random.default_rng(91)
        truth = np.linspace(120.0, 820.0, 11)
        batch = [
            synth_spectrum(
                rng, [406600.0, 406600.0 + g], fwhm_ghz=15.0, snr=30.0,
                f_lo=406300.0, f_hi=407800.0, n_points=3000,
                label=f"s{i:02d}.csv",
            )
            for i, g in enumerate(truth)
        ]
        stats = batch_gss_stats(batch)
        assert stats.n_spectra == 11
        assert stats.n_single_emitters == 11
        vals = stats.gss_values_ghz
        assert np.allclose(np.sort(vals), truth, atol=7.5)  # half linewidth
        assert stats.summary.mean_ghz == pytest.approx(np.mean(vals), rel=1e-12)
        assert stats.summary.std_ghz == pytest.approx(np.std(vals, ddof=1), rel=1e-12)
        assert stats.summary.sem_ghz == pytest.approx(
            np.std(vals, ddof=1) / np.sqrt(11), rel=1e-12
        )

    def test_all_multi_emitter_raises(self):
        rng = np.random.default_rng(101)
        centers = [406300.0 + 150.0 * i for i in range(6)]
        batch = [
            synth_spectrum(rng, centers, fwhm_ghz=15.0, snr=30.0,
                           f_lo=406000.0, f_hi=407400.0)
            for _ in range(3)
        ]
        with pytest.raises(NoSingleEmitters):
            batch_gss_stats(batch)

    def test_empty_batch(self):
        with pytest.raises(EmptyRequest):
            batch_gss_stats([])


class TestSpectrumValidation:
    def test_strictly_increasing_required(self):
        freqs = np.linspace(0, 10, 20)
        freqs[4] = freqs[3]
        with pytest.raises(ValueError):
            Spectrum(freqs, np.ones(20))

    def test_negative_intensity_rejected(self):
        intens = np.ones(20)
        intens[2] = -0.5
        with pytest.raises(ValueError):
            Spectrum(np.linspace(0, 10, 20), intens)

    def test_min_points(self):
        with pytest.raises(ValueError):
            Spectrum(np.linspace(0, 10, 8), np.ones(8))

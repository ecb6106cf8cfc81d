"""Term banding, template grammar, and the preference predictor."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from retouchkit.styletext import (
    TERMS,
    AtpModel,
    AtpTrainConfig,
    TextParseError,
    atp_mse,
    atp_predict,
    atp_train,
    delta_to_band,
    delta_to_term,
    parse_text,
    preference_delta,
    render_from_bands,
    render_text,
)

ALL_MID = (
    "Set the brightness to medium, make the colors natural, adjust color "
    "variation to be moderate, set the lighting to be balanced, use a "
    "standard color palette, make the contrast medium."
)


class TestBands:
    @pytest.mark.parametrize("delta,band", [
        (4.0, 1), (1.5, 1), (1.5000001, 1),
        (1.4999999, 2), (0.5, 2),
        (0.49, 3), (0.0, 3), (-0.5, 3),
        (-0.5000001, 4), (-1.0, 4), (-1.5, 4),
        (-1.5000001, 5), (-4.0, 5),
    ])
    def test_band_boundaries(self, delta, band):
        assert delta_to_band(delta) == band

    def test_term_table_spot_checks(self):
        assert delta_to_term(1, -1.0) == "muted"
        assert delta_to_term(3, 1.5) == "dramatic"
        assert delta_to_term(5, 0.49) == "medium"
        assert delta_to_term(0, 4.0) == "very high"
        assert delta_to_term(4, -2.0) == "monochromatic"

    def test_bad_attribute_index(self):
        with pytest.raises(IndexError):
            delta_to_term(6, 0.0)

    def test_terms_injective_per_attribute(self):
        for row in TERMS:
            assert len(set(row)) == 5


class TestRender:
    def test_all_zero_delta(self):
        assert render_text(np.zeros(6)) == ALL_MID

    def test_strong_increase_everywhere(self):
        text = render_text([2.0] * 6)
        for term in ("very high", "intensely vibrant", "extreme", "dramatic",
                     "full-spectrum"):
            assert term in text

    def test_fractional_delta_uses_bands(self):
        # 0.4 sits in the middle band, not "high"
        text = render_text([0.4, 0, 0, 0, 0, 0])
        assert text == ALL_MID

    def test_needs_six_components(self):
        with pytest.raises(ValueError):
            render_text([1.0, 2.0])

    def test_render_from_bands_validates(self):
        with pytest.raises(ValueError):
            render_from_bands([0, 3, 3, 3, 3, 3])

    def test_injective_on_band_vectors(self):
        seen = set()
        rng = np.random.default_rng(0)
        for _ in range(300):
            bands = tuple(rng.integers(1, 6, 6))
            seen.add((bands, render_from_bands(bands)))
        texts = {t for _, t in seen}
        assert len(texts) == len({b for b, _ in seen})


class TestParse:
    def test_exhaustive_round_trip(self):
        for bands in itertools.product(range(1, 6), repeat=6):
            assert parse_text(render_from_bands(bands)) == bands

    def test_render_parse_render_fixed_point(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            delta = rng.uniform(-4, 4, 6)
            text = render_text(delta)
            assert render_from_bands(parse_text(text)) == text

    @given(st.lists(st.integers(1, 5), min_size=6, max_size=6))
    @settings(max_examples=60, deadline=None)
    def test_round_trip_property(self, bands):
        assert list(parse_text(render_from_bands(bands))) == bands

    def test_arbitrary_string_fails_on_first_slot(self):
        with pytest.raises(TextParseError, match=r"slot 1 \(mean_brightness\)"):
            parse_text("please make it pop")

    def test_unknown_term_names_its_slot(self):
        bad = ALL_MID.replace("natural", "garish")
        with pytest.raises(TextParseError, match=r"slot 2 \(mean_saturation\)"):
            parse_text(bad)

    def test_corrupted_scaffold_names_slot(self):
        # Slot 4's lead doubles as slot 3's terminator, so mangling it means
        # slot 3 is the first slot that cannot be matched.
        bad = ALL_MID.replace("set the lighting to be", "set lighting to")
        with pytest.raises(TextParseError, match=r"slot 3 \(saturation_std\)"):
            parse_text(bad)

    def test_trailing_junk_rejected(self):
        with pytest.raises(TextParseError, match="trailing"):
            parse_text(ALL_MID + " thanks")

    def test_vibrant_maps_to_band_two(self):
        text = ALL_MID.replace("natural", "vibrant")
        assert parse_text(text)[1] == 2


class TestPreferenceDelta:
    def test_delta_and_text(self):
        pd = preference_delta([5, 3, 3, 3, 3, 3], [1, 3, 3, 3, 3, 3])
        assert pd.delta[0] == pytest.approx(4.0)
        assert pd.terms[0] == "very high"
        assert pd.text.startswith("Set the brightness to very high,")

    def test_identical_levels_all_mid(self):
        pd = preference_delta([3.0] * 6, [3.0] * 6)
        assert pd.text == ALL_MID

    def test_fractional_prediction(self):
        pd = preference_delta([3.4, 3, 3, 3, 3, 3], [3, 3, 3, 3, 3, 3])
        assert pd.terms[0] == "medium"

    def test_out_of_range_delta_rejected(self):
        with pytest.raises(ValueError):
            preference_delta([9.0] * 6, [1.0] * 6)


class TestAtp:
    def test_initialize_deterministic(self):
        a = AtpModel.initialize(seed=4)
        b = AtpModel.initialize(seed=4)
        for k in a.params:
            np.testing.assert_array_equal(a.params[k].data, b.params[k].data)

    def test_save_load_round_trip(self, tmp_path):
        model = AtpModel.initialize(seed=2, hidden=16)
        path = tmp_path / "atp.ckpt"
        model.save(path)
        loaded = AtpModel.load(path)
        assert loaded.hidden == 16
        # checkpoints store float32 payloads: load == float32 cast of source
        for k in model.params:
            np.testing.assert_array_equal(
                loaded.params[k].data, model.params[k].data.astype(np.float32)
            )
        x = np.array([2.0, 3.0, 4.0, 1.0, 5.0, 3.0])
        np.testing.assert_allclose(
            atp_predict(loaded, x), atp_predict(model, x), rtol=1e-6, atol=1e-6
        )
        # a second save of the loaded model reproduces the file exactly
        path2 = tmp_path / "atp2.ckpt"
        loaded.save(path2)
        assert path.read_bytes() == path2.read_bytes()

    def test_predict_clamped_to_levels(self):
        model = AtpModel.initialize(seed=0)
        # blow up the last bias so raw outputs leave [1, 5]
        model.params["b3"].data[:] = 40.0
        out = atp_predict(model, [3] * 6)
        assert np.all(out <= 5.0) and np.all(out >= 1.0)

    def test_single_pair_memorized(self):
        pairs = [(np.array([1, 2, 3, 4, 5, 3], float),
                  np.array([2, 3, 4, 5, 5, 4], float))]
        model = atp_train(pairs, AtpTrainConfig(steps=500, seed=0))
        assert atp_mse(model, pairs) < 1e-3

    def test_two_seeds_both_fit_increment_rule(self):
        rng = np.random.default_rng(3)
        inputs = rng.integers(1, 5, (64, 6)).astype(float)
        pairs = [(s, s + 1.0) for s in inputs]
        for seed in (0, 1):
            model = atp_train(pairs, AtpTrainConfig(steps=1500, seed=seed))
            assert atp_mse(model, pairs) < 1e-2
        a = atp_train(pairs, AtpTrainConfig(steps=200, seed=0))
        b = atp_train(pairs, AtpTrainConfig(steps=200, seed=1))
        assert any(
            not np.array_equal(a.params[k].data, b.params[k].data) for k in a.params
        )

    def test_held_out_mae_on_saturating_rule(self):
        rng = np.random.default_rng(7)
        train_in = rng.integers(1, 6, (200, 6)).astype(float)
        test_in = rng.integers(1, 6, (100, 6)).astype(float)
        rule = lambda s: np.minimum(s + 1.0, 5.0)
        model = atp_train([(s, rule(s)) for s in train_in])
        errors = [
            np.abs(atp_predict(model, s) - rule(s)).mean() for s in test_in
        ]
        assert float(np.mean(errors)) < 0.25

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError):
            atp_train([])

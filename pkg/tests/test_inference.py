"""Cohort building/storage and the score combination chain."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dialectid.errors import (
    BadMagicError,
    ConfigurationError,
    DimensionError,
    FileFormatError,
    NormalizationError,
    TruncatedFileError,
    VersionError,
)
from dialectid.features import FeatureMatrix
from dialectid.infer import (
    CohortSet,
    System,
    build_cohorts,
    classify,
    cohort_scores,
    combine,
    fuse,
    load_cohorts,
    minmax_normalize,
    normalize_scores,
    save_cohorts,
    unit_normalize,
)
from dialectid.models import ResNetConfig, build_resnet34
from dialectid.train import Manifest, Utterance

TINY_RESNET = dict(stage_depths=(1, 1, 1, 1), stage_channels=(2, 3, 4, 5), embed_dim=6)


def unit_rows(rng, n, dim):
    rows = rng.normal(size=(n, dim))
    return (rows / np.linalg.norm(rows, axis=1, keepdims=True)).astype(np.float32)


def make_cohorts(rng, counts=(4, 3, 5), dim=6):
    return CohortSet(embeddings=tuple(unit_rows(rng, n, dim) for n in counts))


class TestCohortSet:
    def test_counts_and_dims(self, rng):
        cs = make_cohorts(rng)
        assert cs.n_classes == 3
        assert cs.embed_dim == 6
        assert cs.counts() == (4, 3, 5)

    def test_rejects_non_unit_rows(self, rng):
        rows = unit_rows(rng, 4, 6)
        rows[2] *= 1.01
        with pytest.raises(ConfigurationError, match="unit-norm"):
            CohortSet(embeddings=(rows,))

    def test_rejects_empty_class(self, rng):
        with pytest.raises(ConfigurationError):
            CohortSet(embeddings=(unit_rows(rng, 3, 6), np.zeros((0, 6), dtype=np.float32)))

    def test_rejects_mixed_dims(self, rng):
        with pytest.raises(ConfigurationError):
            CohortSet(embeddings=(unit_rows(rng, 3, 6), unit_rows(rng, 3, 5)))


class TestCohortStore:
    def test_round_trip(self, rng, tmp_path):
        cs = make_cohorts(rng)
        path = tmp_path / "c.adco"
        save_cohorts(path, cs)
        back = load_cohorts(path)
        assert back.counts() == cs.counts()
        for a, b in zip(cs.embeddings, back.embeddings):
            np.testing.assert_array_equal(a, b)

    def test_save_load_save_byte_identical(self, rng, tmp_path):
        cs = make_cohorts(rng)
        p1, p2 = tmp_path / "a.adco", tmp_path / "b.adco"
        save_cohorts(p1, cs)
        save_cohorts(p2, load_cohorts(p1))
        assert p1.read_bytes() == p2.read_bytes()

    def test_bad_magic_version_truncation(self, rng, tmp_path):
        path = tmp_path / "c.adco"
        save_cohorts(path, make_cohorts(rng))
        blob = path.read_bytes()

        path.write_bytes(b"WHAT" + blob[4:])
        with pytest.raises(BadMagicError):
            load_cohorts(path)

        path.write_bytes(blob[:4] + b"\x07" + blob[5:])
        with pytest.raises(VersionError):
            load_cohorts(path)

        path.write_bytes(blob[:-10])
        with pytest.raises(TruncatedFileError):
            load_cohorts(path)

        path.write_bytes(blob + b"\x00" * 3)
        with pytest.raises(FileFormatError):
            load_cohorts(path)

    def test_corrupted_embeddings_rejected(self, rng, tmp_path):
        path = tmp_path / "c.adco"
        save_cohorts(path, make_cohorts(rng, counts=(2,), dim=4))
        blob = bytearray(path.read_bytes())
        blob[-16:] = np.full(4, 0.9, dtype="<f4").tobytes()
        path.write_bytes(bytes(blob))
        with pytest.raises(FileFormatError, match="unit-norm"):
            load_cohorts(path)


def build_tiny_system(seed=0, n_classes=3, dim=8):
    model = build_resnet34(ResNetConfig(n_classes=n_classes, in_dim=dim, **TINY_RESNET), seed=seed)
    model.eval()
    return model


def manifest_and_features(n=9, dim=8, seed=0):
    labels = ("ca", "eg", "le")
    utts = [Utterance(f"u{i}", f"/p/u{i}", labels[i % 3], 1.0) for i in range(n)]
    man = Manifest(utts)
    rng = np.random.default_rng(seed)
    feats = {
        u.utt_id: FeatureMatrix(
            data=rng.normal(size=(40, dim)).astype(np.float32),
            frame_shift_ms=10.0,
            source="mfcc",
        )
        for u in man
    }
    return man, feats


class TestBuildCohorts:
    def test_clamps_to_class_size(self):
        man, feats = manifest_and_features()
        model = build_tiny_system()
        cs = build_cohorts(model, man, feats, n_per_class=500, rng=0)
        assert cs.counts() == (3, 3, 3)  # all available used

    def test_samples_without_replacement(self):
        man, feats = manifest_and_features(n=12)
        model = build_tiny_system()
        cs = build_cohorts(model, man, feats, n_per_class=3, rng=1)
        assert cs.counts() == (3, 3, 3)
        for block in cs.embeddings:
            gram = block @ block.T
            off_diag = gram - np.diag(np.diag(gram))
            assert np.all(off_diag < 1.0 - 1e-6)  # no duplicated rows

    def test_same_seed_identical_membership(self):
        man, feats = manifest_and_features(n=12)
        model = build_tiny_system()
        a = build_cohorts(model, man, feats, n_per_class=2, rng=7)
        b = build_cohorts(model, man, feats, n_per_class=2, rng=7)
        for x, y in zip(a.embeddings, b.embeddings):
            np.testing.assert_array_equal(x, y)

    def test_unit_norm_contract(self):
        man, feats = manifest_and_features()
        cs = build_cohorts(build_tiny_system(), man, feats, rng=0)
        for block in cs.embeddings:
            np.testing.assert_allclose(np.linalg.norm(block, axis=1), 1.0, atol=1e-6)

    def test_embed_cache_reused(self):
        man, feats = manifest_and_features()
        model = build_tiny_system()
        cache = {}
        a = build_cohorts(model, man, feats, rng=0, embed_cache=cache)
        assert len(cache) == 9
        # poison the features; cached embeddings must make the rerun identical
        feats2 = {k: FeatureMatrix(np.ones_like(v.data), 10.0, "mfcc") for k, v in feats.items()}
        b = build_cohorts(model, man, feats2, rng=0, embed_cache=cache)
        for x, y in zip(a.embeddings, b.embeddings):
            np.testing.assert_array_equal(x, y)

    def test_restores_training_mode(self):
        man, feats = manifest_and_features()
        model = build_tiny_system()
        model.train()
        build_cohorts(model, man, feats, rng=0)
        assert model.training

    def test_bad_args(self):
        man, feats = manifest_and_features()
        with pytest.raises(ConfigurationError):
            build_cohorts(build_tiny_system(), man, feats, n_per_class=0)


class TestCohortScores:
    def test_self_similarity_is_one(self, rng):
        e = unit_rows(rng, 1, 6)[0]
        cs = CohortSet(embeddings=(e[None, :],))
        assert cohort_scores(e, cs)[0] == pytest.approx(1.0, abs=1e-6)

    def test_orthogonal_cohort_scores_zero(self):
        e = np.zeros(4, dtype=np.float32)
        e[0] = 1.0
        block = np.stack([np.eye(4, dtype=np.float32)[1], np.eye(4, dtype=np.float32)[2]])
        cs = CohortSet(embeddings=(block,))
        assert cohort_scores(e, cs)[0] == pytest.approx(0.0, abs=1e-7)

    def test_antipodal_pair_averages_to_zero(self, rng):
        e = unit_rows(rng, 1, 6)[0]
        cs = CohortSet(embeddings=(np.stack([e, -e]),))
        assert cohort_scores(e, cs)[0] == pytest.approx(0.0, abs=1e-6)

    def test_scores_bounded(self, rng):
        cs = make_cohorts(rng)
        scores = cohort_scores(rng.normal(size=6), cs)
        assert np.all(scores >= -1.0 - 1e-9) and np.all(scores <= 1.0 + 1e-9)

    def test_zero_embedding_rejected(self, rng):
        with pytest.raises(NormalizationError):
            cohort_scores(np.zeros(6), make_cohorts(rng))

    def test_dim_mismatch(self, rng):
        with pytest.raises(DimensionError):
            cohort_scores(np.ones(5), make_cohorts(rng, dim=6))


class TestMinmaxNormalize:
    def test_direct_formula(self):
        np.testing.assert_allclose(minmax_normalize([2, 4, 6]), [0.0, 0.5, 1.0])

    def test_all_equal_goes_uniform(self):
        np.testing.assert_allclose(minmax_normalize([0.7, 0.7, 0.7]), [1 / 3] * 3)

    def test_argmax_preserved(self, rng):
        for _ in range(20):
            x = rng.normal(size=5)
            if np.ptp(x) == 0:
                continue
            assert np.argmax(minmax_normalize(x)) == np.argmax(x)

    def test_positive_affine_invariance_exact(self):
        # dyadic inputs and coefficients make the arithmetic exact in binary
        x = np.array([0.25, -1.5, 3.0, 0.0])
        for a, b in ((2.0, 0.5), (0.5, -4.0), (8.0, 1.0)):
            np.testing.assert_array_equal(minmax_normalize(a * x + b), minmax_normalize(x))

    def test_needs_two_entries(self):
        with pytest.raises(DimensionError):
            minmax_normalize([1.0])

    def test_alternative_methods(self):
        z = normalize_scores([1.0, 2.0, 3.0], method="znorm")
        assert z.mean() == pytest.approx(0.0, abs=1e-12)
        assert z.std() == pytest.approx(1.0)
        s = normalize_scores([1.0, 2.0, 3.0], method="softmax")
        assert s.sum() == pytest.approx(1.0)
        np.testing.assert_allclose(normalize_scores([2.0, 2.0], method="znorm"), [0.5, 0.5])
        with pytest.raises(ConfigurationError):
            normalize_scores([1.0, 2.0], method="rank")


class TestCombine:
    def test_arithmetic(self):
        np.testing.assert_allclose(combine([0.6, 0.4], [1.0, 0.0]), [0.8, 0.2])

    def test_agreeing_argmax_survives(self, rng):
        for _ in range(10):
            p = rng.dirichlet(np.ones(4))
            c = minmax_normalize(rng.normal(size=4))
            if np.argmax(p) == np.argmax(c):
                assert np.argmax(combine(p, c)) == np.argmax(p)

    def test_cohort_term_can_overturn_softmax(self):
        out = combine([0.51, 0.49], [0.0, 1.0])
        np.testing.assert_allclose(out, [0.255, 0.745])
        assert np.argmax(out) == 1

    def test_simplex_bound(self, rng):
        for _ in range(10):
            p = rng.dirichlet(np.ones(3))
            c = minmax_normalize(rng.normal(size=3))
            out = combine(p, c)
            assert np.all(out >= 0.0) and np.all(out <= 1.0)

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            combine([0.5, 0.5], [1.0, 0.0, 0.0])

    def test_weight_range(self):
        with pytest.raises(ConfigurationError):
            combine([0.5, 0.5], [1.0, 0.0], weight=1.5)


class TestFuse:
    def test_four_copies_identity(self):
        v = np.array([0.2, 0.5, 0.3])
        np.testing.assert_allclose(fuse([v, v, v, v]), v)

    def test_equal_weight_arithmetic(self):
        systems = [(0.9, 0.1), (0.9, 0.1), (0.2, 0.8), (0.6, 0.4)]
        out = fuse([np.array(s) for s in systems])
        np.testing.assert_allclose(out, [0.65, 0.35])
        assert np.argmax(out) == 0

    def test_permutation_commutes(self, rng):
        vectors = [rng.dirichlet(np.ones(3)) for _ in range(4)]
        weights = [0.1, 0.2, 0.3, 0.4]
        a = fuse(vectors, weights)
        perm = [2, 0, 3, 1]
        b = fuse([vectors[i] for i in perm], [weights[i] for i in perm])
        np.testing.assert_allclose(a, b, atol=1e-15)

    def test_weight_sum_enforced(self):
        v = np.ones(2) / 2
        with pytest.raises(ConfigurationError):
            fuse([v, v], [0.5, 0.6])
        fuse([v, v], [0.5, 0.5 + 5e-10])  # inside tolerance

    def test_length_mismatch(self):
        with pytest.raises(ConfigurationError):
            fuse([np.ones(2) / 2, np.ones(3) / 3])
        with pytest.raises(ConfigurationError):
            fuse([np.ones(2) / 2], [0.5, 0.5])

    @given(st.integers(1, 5))
    @settings(max_examples=20, deadline=None)
    def test_simplex_bound(self, n_systems):
        rng = np.random.default_rng(n_systems)
        vectors = [rng.dirichlet(np.ones(4)) for _ in range(n_systems)]
        out = fuse(vectors)
        assert np.all(out >= 0.0) and np.all(out <= 1.0)


class TestSystemAndClassify:
    def _system(self, seed=0):
        model = build_tiny_system(seed=seed)
        man, feats = manifest_and_features(seed=seed)
        return System(model=model, cohorts=build_cohorts(model, man, feats, rng=seed))

    def _feat(self, seed=5, dim=8):
        rng = np.random.default_rng(seed)
        return FeatureMatrix(rng.normal(size=(50, dim)).astype(np.float32), 10.0, "mfcc")

    def test_single_system_equals_combined_decision(self):
        sys0 = self._system()
        feat = self._feat()
        direct = sys0.scores(feat)
        idx, fused = classify([feat], [sys0])
        np.testing.assert_allclose(fused, direct)
        assert idx == np.argmax(direct)

    def test_unanimous_agreement(self):
        systems = [self._system(seed=s) for s in range(3)]
        feat = self._feat()
        per = [s.scores(feat) for s in systems]
        winners = {int(np.argmax(p)) for p in per}
        idx, _ = classify([feat] * 3, systems)
        if len(winners) == 1:
            assert idx == winners.pop()

    def test_deterministic(self):
        systems = [self._system(seed=s) for s in range(2)]
        feat = self._feat()
        a = classify([feat, feat], systems)
        b = classify([feat, feat], systems)
        assert a[0] == b[0]
        np.testing.assert_array_equal(a[1], b[1])

    def test_tie_breaks_to_lowest_index(self):
        # bypass model scoring: fuse two mirrored vectors to force a tie
        fused = fuse([np.array([0.6, 0.4]), np.array([0.4, 0.6])])
        assert fused[0] == fused[1]
        assert int(np.argmax(fused)) == 0

    def test_softmax_only_flag(self):
        sys0 = self._system()
        feat = self._feat()
        probs = sys0.scores(feat, softmax_only=True)
        assert probs.sum() == pytest.approx(1.0, abs=1e-9)

    def test_cohort_class_count_must_match(self, rng):
        model = build_tiny_system(n_classes=4)
        with pytest.raises(ConfigurationError):
            System(model=model, cohorts=make_cohorts(rng))  # 3 classes

    def test_cohort_dim_must_match(self, rng):
        model = build_tiny_system()
        with pytest.raises(ConfigurationError):
            System(model=model, cohorts=make_cohorts(rng, dim=5))

    def test_feature_count_must_match_systems(self):
        sys0 = self._system()
        with pytest.raises(ConfigurationError):
            classify([self._feat(), self._feat()], [sys0])

    def test_feature_dim_mismatch_names_both(self):
        sys0 = self._system()
        bad = self._feat(dim=12)
        with pytest.raises(DimensionError, match=r"8.*12|12.*8"):
            classify([bad], [sys0])


class TestUnitNormalize:
    def test_result_is_unit(self, rng):
        for _ in range(50):
            v = rng.normal(size=6) * 10.0 ** rng.integers(-3, 4)
            n = np.linalg.norm(unit_normalize(v))
            assert abs(n - 1.0) <= 1e-6

    def test_zero_rejected(self):
        with pytest.raises(NormalizationError):
            unit_normalize(np.zeros(4))

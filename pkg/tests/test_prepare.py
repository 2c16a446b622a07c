"""Preparation-stage contracts for all five attack variants."""

import numpy as np
import pytest

import mi_audit.attacks.prepare as prepare_mod
from mi_audit.attacks import (
    NoiseBankConfig,
    expected_shadow_count,
    fit_gaussian,
    make_noise_bank,
    prepare_amia,
    prepare_eamia,
    prepare_emia,
    prepare_flira,
    prepare_nlira,
    prepared_to_dict,
)
from mi_audit.data import Dataset, SubjectSet, make_split, sample_subjects, synth_blob_pair
from mi_audit.errors import ConfigError
from mi_audit.nn import (
    Dense,
    ModelSpec,
    Relu,
    SoftmaxOutput,
    TrainConfig,
    count_training_runs,
    init_params,
    train,
)


@pytest.fixture
def setting():
    d_r, d_s = synth_blob_pair(2, 4, 0.25, 80, 20, seed=5)
    split = make_split(d_r, d_s, seed=8)
    spec = ModelSpec((4,), (Dense(4, 8), Relu(), Dense(8, 2), SoftmaxOutput(2)))
    cfg = TrainConfig(epochs=4, batch_size=16, learning_rate=0.3, seed=0)
    target = train(spec, split.d_t, cfg)
    subjects = sample_subjects(split, k=4, seed=3)
    return target, spec, split, subjects, cfg


NOISE = NoiseBankConfig(p=3, sigma_noise=0.02)


class TestShadowAccounting:
    def test_flira_trains_exactly_n(self, setting):
        target, spec, split, subjects, cfg = setting
        with count_training_runs() as runs:
            prepared = prepare_flira(target, spec, split, subjects, 5, cfg, seed=1, noise_cfg=NOISE)
        assert runs.count == 5 == expected_shadow_count("flira", 5, subjects.k)
        assert prepared.metadata["shadow_models_trained"] == 5

    def test_emia_trains_exactly_n(self, setting):
        target, spec, split, subjects, cfg = setting
        with count_training_runs() as runs:
            prepared = prepare_emia(target, spec, split, subjects, 4, cfg, seed=1, noise_cfg=NOISE)
        assert runs.count == 4 == expected_shadow_count("emia", 4, subjects.k)

    def test_nlira_trains_n_times_k_plus_one(self, setting):
        target, spec, split, subjects, cfg = setting
        with count_training_runs() as runs:
            prepared = prepare_nlira(target, spec, split, subjects, 4, cfg, seed=1, noise_cfg=NOISE)
        assert runs.count == 4 * (subjects.k + 1) == expected_shadow_count("nlira", 4, subjects.k)
        assert prepared.metadata["shadow_models_trained"] == 20

    @pytest.mark.parametrize("fn,name", [(prepare_amia, "amia"), (prepare_eamia, "eamia")])
    def test_adversarial_attacks_train_two_n(self, setting, fn, name):
        target, spec, split, subjects, cfg = setting
        with count_training_runs() as runs:
            prepared = fn(
                target, spec, split, subjects, 3, cfg,
                epsilon=0.02, fgsm_steps=3, seed=1, noise_cfg=NOISE,
            )
        assert runs.count == 6 == expected_shadow_count(name, 3, subjects.k)

    def test_nlira_cost_guard(self, setting):
        target, spec, split, subjects, cfg = setting
        with pytest.raises(ConfigError, match="ceiling"):
            prepare_nlira(
                target, spec, split, subjects, 4, cfg, seed=1,
                noise_cfg=NOISE, cost_ceiling=15,
            )

    def test_n_below_two_rejected(self, setting):
        target, spec, split, subjects, cfg = setting
        with pytest.raises(ConfigError):
            prepare_flira(target, spec, split, subjects, 1, cfg, seed=1)

    def test_reference_shadow_budget_of_fifty(self, setting):
        # the published configuration trains 50 non-member shadows
        target, spec, split, subjects, cfg = setting
        quick = TrainConfig(epochs=1, batch_size=16, learning_rate=0.3, seed=0)
        with count_training_runs() as runs:
            prepared = prepare_flira(target, spec, split, subjects, 50, quick, seed=1)
        assert runs.count == 50
        assert prepared.records[0].noise_nonmember.shape == (1, 50)


class TestTrainingSetStructure:
    """Record every shadow training set and check the sampling contracts."""

    @pytest.fixture
    def recorded(self, setting, monkeypatch):
        recorded_sets = []
        real_train = prepare_mod.train

        def recording_train(spec, data, cfg):
            recorded_sets.append(data)
            return real_train(spec, data, cfg)

        monkeypatch.setattr(prepare_mod, "train", recording_train)
        return recorded_sets

    @staticmethod
    def _contains(data: Dataset, x: np.ndarray) -> bool:
        return any(np.array_equal(row, x) for row in data.inputs)

    def test_nlira_member_sets_contain_their_subject(self, setting, recorded):
        target, spec, split, subjects, cfg = setting
        prepare_nlira(target, spec, split, subjects, 2, cfg, seed=1, noise_cfg=NOISE)
        shared = recorded[: 2]
        member_sets = recorded[2:]
        assert len(member_sets) == 2 * subjects.k
        for i in range(subjects.k):
            for j in range(2):
                data = member_sets[i * 2 + j]
                assert self._contains(data, subjects.inputs[i])
        for data in shared:
            for x in subjects.inputs:
                assert not self._contains(data, x)

    def test_flira_shadow_sets_exclude_subjects(self, setting, recorded):
        target, spec, split, subjects, cfg = setting
        prepare_flira(target, spec, split, subjects, 3, cfg, seed=1, noise_cfg=NOISE)
        for data in recorded:
            for x in subjects.inputs:
                assert not self._contains(data, x)

    def test_amia_subject_in_exactly_one_half_per_round(self, setting, recorded):
        target, spec, split, subjects, cfg = setting
        prepared = prepare_amia(
            target, spec, split, subjects, 3, cfg,
            epsilon=0.0, fgsm_steps=1, seed=1, noise_cfg=NOISE,
        )
        assert len(recorded) == 6  # (m1, m2) per round
        for i in range(subjects.k):
            for j in range(3):
                m1, m2 = recorded[2 * j], recorded[2 * j + 1]
                in_m1 = self._contains(m1, subjects.inputs[i])
                in_m2 = self._contains(m2, subjects.inputs[i])
                assert in_m1 != in_m2  # exactly one member model per round
                # sign bookkeeping: -1 when the subject sat in the first half
                expected_sign = -1 if in_m1 else 1
                assert prepared.records[i].bisection_signs[j] == expected_sign

    def test_emia_sets_are_soft_labeled_and_sized(self, setting, recorded):
        target, spec, split, subjects, cfg = setting
        prepare_emia(target, spec, split, subjects, 2, cfg, seed=1, noise_cfg=NOISE)
        for data in recorded:
            assert data.soft_labels is not None
            assert len(data) == split.attacker_pool_size
            np.testing.assert_allclose(data.soft_labels.sum(axis=1), 1.0, atol=1e-9)

    def test_eamia_soft_rows_on_attacker_portion_only(self, setting, recorded):
        target, spec, split, subjects, cfg = setting
        prepare_eamia(
            target, spec, split, subjects, 2, cfg,
            epsilon=0.02, fgsm_steps=2, seed=1, noise_cfg=NOISE,
        )
        pool = split.attacker_pool_size
        for data in recorded:
            # subjects ride along with exact one-hot rows (their ground-truth
            # labels), the attacker draw carries the target's soft rows
            assert data.soft_labels is not None
            subject_rows = data.soft_labels[pool:]
            assert np.all(np.isin(subject_rows, [0.0, 1.0]))
            soft_rows = data.soft_labels[:pool]
            assert not np.all(np.isin(soft_rows, [0.0, 1.0]))


class TestPreparedContents:
    def test_offline_records_have_no_member_side(self, setting):
        target, spec, split, subjects, cfg = setting
        prepared = prepare_flira(target, spec, split, subjects, 3, cfg, seed=2, noise_cfg=NOISE)
        assert not prepared.has_member_stats
        for record in prepared.records:
            assert record.member_stats is None
            assert record.noise_member is None
            np.testing.assert_array_equal(record.delta_x, 0.0)
            assert record.noise_nonmember.shape == (3, 3)  # (p, N)

    def test_zero_noise_level_reproduces_vanilla_stats(self, setting):
        target, spec, split, subjects, cfg = setting
        prepared = prepare_amia(
            target, spec, split, subjects, 3, cfg,
            epsilon=0.02, fgsm_steps=2, seed=2, noise_cfg=NOISE,
        )
        bank = prepared.noise_bank
        np.testing.assert_array_equal(bank.noises[0], 0.0)
        for record in prepared.records:
            assert record.nonmember_stats == fit_gaussian(record.noise_nonmember[0])
            assert record.member_stats == fit_gaussian(record.noise_member[0])

    def test_deterministic_per_seed(self, setting):
        target, spec, split, subjects, cfg = setting
        a = prepare_amia(target, spec, split, subjects, 2, cfg, 0.02, 3, seed=5, noise_cfg=NOISE)
        b = prepare_amia(target, spec, split, subjects, 2, cfg, 0.02, 3, seed=5, noise_cfg=NOISE)
        assert prepared_to_dict(a) == prepared_to_dict(b)

    def test_ground_truth_bits_never_read(self, setting):
        target, spec, split, subjects, cfg = setting
        flipped = SubjectSet(
            inputs=subjects.inputs,
            labels=subjects.labels,
            source_indices=subjects.source_indices,
            ground_truth=1 - subjects.ground_truth,
        )
        for fn, kwargs in [
            (prepare_flira, {}),
            (prepare_nlira, {}),
            (prepare_amia, {"epsilon": 0.02, "fgsm_steps": 2}),
        ]:
            a = fn(target, spec, split, subjects, 2, cfg, seed=7, noise_cfg=NOISE, **kwargs)
            b = fn(target, spec, split, flipped, 2, cfg, seed=7, noise_cfg=NOISE, **kwargs)
            assert prepared_to_dict(a) == prepared_to_dict(b)

    def test_eps_zero_matches_unperturbed_online_style(self, setting):
        target, spec, split, subjects, cfg = setting
        prepared = prepare_amia(
            target, spec, split, subjects, 2, cfg,
            epsilon=0.0, fgsm_steps=3, seed=4, noise_cfg=NOISE,
        )
        assert prepared.epsilon == 0.0
        for record in prepared.records:
            # disabled perturbation: the query point is x itself
            np.testing.assert_array_equal(record.delta_x, 0.0)
            assert record.nonmember_stats == fit_gaussian(record.noise_nonmember[0])


class TestShadowEnsemble:
    def test_pair_counts_enforced(self):
        from mi_audit.attacks import ShadowEnsemble

        with pytest.raises(ValueError, match="2 models per round"):
            ShadowEnsemble(
                models=[object()] * 3,
                kinds=["member-half-1", "member-half-2", "member-half-1"],
                bisections=[np.array([True, False])],
            )
        with pytest.raises(ValueError, match="kind per model"):
            ShadowEnsemble(models=[object()], kinds=[])

    def test_role_assignment_follows_bisection(self):
        from mi_audit.attacks import ShadowEnsemble

        m = [f"model{i}" for i in range(4)]
        masks = [np.array([True, False]), np.array([False, True])]
        ens = ShadowEnsemble(m, ["member-half-1", "member-half-2"] * 2, masks)
        members, nonmembers, signs = ens.roles_for_subject(0)
        assert members == ["model0", "model3"]
        assert nonmembers == ["model1", "model2"]
        assert signs.tolist() == [-1, 1]
        members, _, signs = ens.roles_for_subject(1)
        assert members == ["model1", "model2"]
        assert signs.tolist() == [1, -1]

    def test_offline_ensemble_has_no_roles(self):
        from mi_audit.attacks import ShadowEnsemble

        ens = ShadowEnsemble(["a", "b"], ["nonmember", "nonmember"])
        assert ens.n_rounds == 2
        with pytest.raises(ValueError, match="paired"):
            ens.roles_for_subject(0)


class TestDegenerateEnsembles:
    def test_identical_shadows_hit_sigma_floor_and_score(self, setting):
        # force a "seed collision": every shadow is literally the same model
        target, spec, split, subjects, cfg = setting
        from mi_audit.attacks import SIGMA_FLOOR, PreparedVariables, SubjectRecord, collect_noise_stats
        from mi_audit.indicators import score_subjects

        model = init_params(spec, 123)
        bank = make_noise_bank(spec.input_shape, NOISE, seed=0)
        records = []
        for i in range(subjects.k):
            f_n, f_m = collect_noise_stats(
                subjects.inputs[i], subjects.labels[i],
                np.zeros_like(subjects.inputs[i]), bank,
                [model, model, model], [model, model, model],
            )
            records.append(
                SubjectRecord(
                    delta_x=np.zeros_like(subjects.inputs[i]),
                    nonmember_stats=fit_gaussian(f_n[0]),
                    member_stats=fit_gaussian(f_m[0]),
                    noise_nonmember=f_n,
                    noise_member=f_m,
                    bisection_signs=None,
                )
            )
        prepared = PreparedVariables("nlira", 0.0, bank, records, {})
        assert all(r.nonmember_stats.sigma == SIGMA_FLOOR for r in records)
        scores = score_subjects(target, subjects, prepared, "lr_n")
        assert np.all(np.isfinite(scores))


class TestStatReconstruction:
    def test_flira_stats_rebuilt_from_first_principles(self, setting):
        # independently regenerate the attacker draws and shadow trainings
        # from the published seed derivation, then recompute one subject's
        # statistic bank by hand; everything must agree bitwise
        target, spec, split, subjects, cfg = setting
        from dataclasses import replace

        from mi_audit.data import sample_attacker_set
        from mi_audit.indicators import phi
        from mi_audit.seeding import derive_seed

        n_shadows, seed = 3, 42
        prepared = prepare_flira(
            target, spec, split, subjects, n_shadows, cfg, seed=seed, noise_cfg=NOISE
        )
        i = 1  # arbitrary subject
        phis = []
        for j in range(n_shadows):
            d_a = sample_attacker_set(split, subjects.source_indices, seed, j)
            shadow_cfg = replace(
                cfg,
                seed=derive_seed(seed, "shadow", j, "nonmember"),
                batch_size=min(cfg.batch_size, len(d_a)),
            )
            shadow = train(spec, d_a, shadow_cfg)
            q = shadow.predict_proba(subjects.inputs[i][None])[0, subjects.labels[i]]
            phis.append(phi(q))
        expected = fit_gaussian(phis)
        assert prepared.records[i].nonmember_stats == expected
        np.testing.assert_array_equal(prepared.records[i].noise_nonmember[0], phis)


class TestSoftLabelEquivalence:
    def test_emia_equals_flira_under_perfect_labeler(self, setting):
        target, spec, split, subjects, cfg = setting
        lookup = {
            split.d_r.inputs[i].tobytes(): int(split.d_r.labels[i])
            for i in range(len(split.d_r))
        }

        def perfect_labeler(batch):
            rows = np.zeros((len(batch), 2))
            for r, x in enumerate(batch):
                rows[r, lookup[x.tobytes()]] = 1.0
            return rows

        a = prepare_flira(target, spec, split, subjects, 3, cfg, seed=6, noise_cfg=NOISE)
        b = prepare_emia(perfect_labeler, spec, split, subjects, 3, cfg, seed=6, noise_cfg=NOISE)
        da, db = prepared_to_dict(a), prepared_to_dict(b)
        da.pop("attack"), db.pop("attack")
        assert da == db

    def test_eamia_equals_amia_under_perfect_labeler(self, setting):
        target, spec, split, subjects, cfg = setting
        lookup = {
            split.d_r.inputs[i].tobytes(): int(split.d_r.labels[i])
            for i in range(len(split.d_r))
        }

        def perfect_labeler(batch):
            rows = np.zeros((len(batch), 2))
            for r, x in enumerate(batch):
                rows[r, lookup[x.tobytes()]] = 1.0
            return rows

        a = prepare_amia(target, spec, split, subjects, 2, cfg, 0.02, 2, seed=6, noise_cfg=NOISE)
        b = prepare_eamia(perfect_labeler, spec, split, subjects, 2, cfg, 0.02, 2, seed=6, noise_cfg=NOISE)
        da, db = prepared_to_dict(a), prepared_to_dict(b)
        da.pop("attack"), db.pop("attack")
        assert da == db

    def test_uniform_target_keeps_stats_finite(self, setting):
        _, spec, split, subjects, cfg = setting
        uniform = lambda x: np.full((len(x), 2), 0.5)
        prepared = prepare_emia(uniform, spec, split, subjects, 2, cfg, seed=9, noise_cfg=NOISE)
        for record in prepared.records:
            assert np.isfinite(record.nonmember_stats.mu)
            assert np.all(np.isfinite(record.noise_nonmember))


class TestMemberSignal:
    def test_overfit_member_shadows_raise_member_mean(self):
        # memorization regime: high spread, many epochs, tiny sets
        d_r, d_s = synth_blob_pair(2, 4, 0.35, 60, 20, seed=11)
        split = make_split(d_r, d_s, seed=2)
        spec = ModelSpec((4,), (Dense(4, 16), Relu(), Dense(16, 2), SoftmaxOutput(2)))
        cfg = TrainConfig(epochs=60, batch_size=8, learning_rate=0.4, seed=0)
        target = train(spec, split.d_t, cfg)
        wins = 0
        for seed in range(5):
            subjects = sample_subjects(split, k=3, seed=100 + seed)
            prepared = prepare_nlira(
                target, spec, split, subjects, 4, cfg, seed=seed, noise_cfg=NoiseBankConfig()
            )
            gaps = [
                r.member_stats.mu - r.nonmember_stats.mu for r in prepared.records
            ]
            wins += np.mean(gaps) > 0
        assert wins >= 4

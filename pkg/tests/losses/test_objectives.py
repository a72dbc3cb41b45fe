"""Tests for the training objectives and their reductions."""

import math

import logfire
import numpy as np
from django.test import SimpleTestCase
from scipy.special import log_softmax, logsumexp

from apps.losses.exceptions import MissingSubBatchError, TargetNormalizationError, TargetShapeError
from apps.losses.models import BatchTriplet, LossConfig, LossKind, TargetedLogits
from apps.losses.objectives import (
    energy_ft_loss,
    evaluate_loss,
    free_energy,
    mixoe_loss,
    oe_loss,
    soft_cross_entropy,
    ternary_mixoe_loss,
    uniform_cross_entropy,
)

# Configure logfire for tests - ignore if not configured to avoid warnings
logfire.configure(send_to_logfire=False, console=False)


def brute_ce(logits: np.ndarray, targets: np.ndarray) -> float:
    total = 0.0
    for row, target in zip(logits, targets, strict=True):
        norm = math.log(sum(math.exp(v) for v in row))
        total += -sum(t * (v - norm) for v, t in zip(row, target, strict=True))
    return total / len(logits)


def random_targets(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    raw = rng.uniform(size=(n, k))
    return raw / raw.sum(axis=1, keepdims=True)


class CrossEntropyTestCase(SimpleTestCase):
    def test_uniform_against_uniform(self):
        self.assertAlmostEqual(soft_cross_entropy([0.0, 0.0], [0.5, 0.5]), math.log(2), places=12)

    def test_binary_softplus(self):
        self.assertAlmostEqual(soft_cross_entropy([10.0, 0.0], [1.0, 0.0]), math.log1p(math.exp(-10.0)), places=12)

    def test_argmax_target_beats_swapped_logits(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            logits = rng.normal(size=4)
            best = int(np.argmax(logits))
            target = np.eye(4)[best]
            swapped = logits.copy()
            other = (best + 1) % 4
            swapped[[best, other]] = swapped[[other, best]]
            self.assertLessEqual(soft_cross_entropy(logits, target), soft_cross_entropy(swapped, target))

    def test_matches_brute_force(self):
        rng = np.random.default_rng(0)
        logits = rng.normal(size=(5, 4))
        targets = random_targets(rng, 5, 4)
        self.assertAlmostEqual(soft_cross_entropy(logits, targets), brute_ce(logits, targets), places=12)

    def test_never_below_target_entropy(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            k = int(rng.integers(2, 12))
            target = random_targets(rng, 1, k)[0]
            entropy = -float(np.sum(target * np.log(target)))
            logits = rng.normal(scale=3.0, size=k)
            self.assertGreaterEqual(soft_cross_entropy(logits, target), entropy - 1e-12)
            self.assertAlmostEqual(soft_cross_entropy(np.log(target) + rng.normal(), target), entropy, places=10)

    def test_large_logits_stay_finite(self):
        self.assertTrue(np.isfinite(soft_cross_entropy([1e4, -1e4], [0.0, 1.0])))
        self.assertAlmostEqual(soft_cross_entropy([1e4, -1e4], [0.0, 1.0]), 2e4)

    def test_target_errors(self):
        with self.assertRaises(TargetShapeError):
            soft_cross_entropy([[0.0, 0.0]], [[1.0, 0.0, 0.0]])
        with self.assertRaises(TargetNormalizationError):
            soft_cross_entropy([0.0, 0.0], [0.7, 0.7])
        with self.assertRaises(TargetNormalizationError):
            soft_cross_entropy([0.0, 0.0], [1.5, -0.5])


class OutlierExposureTestCase(SimpleTestCase):
    def setUp(self):
        rng = np.random.default_rng(1)
        self.id_logits = rng.normal(size=(6, 5))
        self.id_targets = np.eye(5)[rng.integers(0, 5, size=6)]
        self.out_logits = rng.normal(size=(4, 5))

    def test_zero_weight_is_cross_entropy(self):
        self.assertEqual(
            oe_loss(self.id_logits, self.id_targets, self.out_logits, 0.0),
            soft_cross_entropy(self.id_logits, self.id_targets),
        )

    def test_uniform_softmax_outliers_cost_log_k(self):
        self.assertAlmostEqual(uniform_cross_entropy(np.full((3, 5), 2.0)), math.log(5), places=12)

    def test_matches_two_term_evaluation(self):
        expected = brute_ce(self.id_logits, self.id_targets) + 0.5 * brute_ce(self.out_logits, np.full((4, 5), 0.2))
        self.assertAlmostEqual(oe_loss(self.id_logits, self.id_targets, self.out_logits, 0.5), expected, places=12)

    def test_class_count_must_agree(self):
        with self.assertRaises(TargetShapeError):
            oe_loss(self.id_logits, self.id_targets, np.zeros((2, 3)), 0.5)


class EnergyLossTestCase(SimpleTestCase):
    def setUp(self):
        self.id_targets = np.eye(3)[[0, 1]]

    def test_inactive_margins_leave_cross_entropy(self):
        id_logits = np.array([[30.0, 0.0, 0.0], [0.0, 30.0, 0.0]])
        out_logits = np.zeros((2, 3))
        # ID free energy is about -30, outlier free energy is -log 3
        loss = energy_ft_loss(id_logits, self.id_targets, out_logits, m_in=-25.0, m_out=-7.0)
        self.assertEqual(loss, soft_cross_entropy(id_logits, self.id_targets))

    def test_single_id_penalty(self):
        id_logits = np.zeros((1, 3))
        energy = -math.log(3)
        loss = energy_ft_loss(id_logits, self.id_targets[:1], np.zeros((1, 3)), m_in=energy - 2.0, m_out=-7.0)
        self.assertAlmostEqual(loss - soft_cross_entropy(id_logits, self.id_targets[:1]), 4.0, places=12)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(2)
        id_logits = rng.normal(size=(2, 3))
        out_logits = rng.normal(size=(5, 3))
        m_in, m_out, weight = -3.0, 0.5, 0.1

        e_in = -logsumexp(id_logits, axis=1)
        e_out = -logsumexp(out_logits, axis=1)
        expected = (
            brute_ce(id_logits, self.id_targets)
            + weight * np.mean(np.maximum(m_out - e_out, 0.0) ** 2)
            + weight * np.mean(np.maximum(e_in - m_in, 0.0) ** 2)
        )
        loss = energy_ft_loss(id_logits, self.id_targets, out_logits, m_in, m_out, weight)
        self.assertAlmostEqual(loss, expected, places=12)

    def test_free_energy_is_negative_log_sum_exp(self):
        np.testing.assert_allclose(free_energy([[0.0, 0.0]]), [-math.log(2)])


class MixedObjectiveTestCase(SimpleTestCase):
    def setUp(self):
        rng = np.random.default_rng(3)
        k = 4
        self.triplet = BatchTriplet(
            in_batch=TargetedLogits(rng.normal(size=(5, k)), np.eye(k)[rng.integers(0, k, size=5)]),
            virtual_out_batch=TargetedLogits(rng.normal(size=(5, k)), random_targets(rng, 5, k)),
            virtual_in_batch=TargetedLogits(rng.normal(size=(5, k)), random_targets(rng, 5, k)),
        )
        self.ce = soft_cross_entropy(self.triplet.in_batch.logits, self.triplet.in_batch.targets)

    def test_mixoe_reductions(self):
        self.assertEqual(mixoe_loss(self.triplet, 0.0), self.ce)

    def test_ternary_reductions(self):
        """Zero weights collapse the ternary objective exactly."""
        self.assertEqual(ternary_mixoe_loss(self.triplet, 5.0, 0.0), mixoe_loss(self.triplet, 5.0))
        self.assertEqual(ternary_mixoe_loss(self.triplet, 0.0, 0.0), self.ce)

    def test_reductions_on_random_batches(self):
        rng = np.random.default_rng(13)
        for trial in range(100):
            n, k = int(rng.integers(1, 33)), int(rng.integers(2, 11))
            scale = rng.uniform(0.1, 20.0)
            triplet = BatchTriplet(
                in_batch=TargetedLogits(scale * rng.normal(size=(n, k)), np.eye(k)[rng.integers(0, k, size=n)]),
                virtual_out_batch=TargetedLogits(scale * rng.normal(size=(n, k)), random_targets(rng, n, k)),
                virtual_in_batch=TargetedLogits(scale * rng.normal(size=(n, k)), random_targets(rng, n, k)),
            )
            beta = float(rng.uniform(0.0, 10.0))
            ce = soft_cross_entropy(triplet.in_batch.logits, triplet.in_batch.targets)
            with self.subTest(trial=trial):
                self.assertEqual(ternary_mixoe_loss(triplet, beta, 0.0), mixoe_loss(triplet, beta))
                self.assertEqual(ternary_mixoe_loss(triplet, 0.0, 0.0), ce)

    def test_lambda_one_virtual_out_is_plain_cross_entropy(self):
        in_batch = self.triplet.in_batch
        triplet = BatchTriplet(in_batch=in_batch, virtual_out_batch=TargetedLogits(in_batch.logits, in_batch.targets))
        self.assertAlmostEqual(mixoe_loss(triplet, 1.0), 2 * self.ce, places=12)

    def test_three_term_sum(self):
        t = self.triplet
        vo = t.virtual_out_batch
        vi = t.virtual_in_batch
        expected = (
            brute_ce(t.in_batch.logits, t.in_batch.targets)
            + 5.0 * brute_ce(vo.logits, vo.targets)
            + 2.0 * brute_ce(vi.logits, vi.targets)
        )
        self.assertAlmostEqual(ternary_mixoe_loss(t, 5.0, 2.0), expected, places=10)

    def test_missing_batches(self):
        bare = BatchTriplet(in_batch=self.triplet.in_batch)
        with self.assertRaises(MissingSubBatchError):
            mixoe_loss(bare, 5.0)
        no_virtual_in = BatchTriplet(in_batch=self.triplet.in_batch, virtual_out_batch=self.triplet.virtual_out_batch)
        with self.assertRaises(MissingSubBatchError):
            ternary_mixoe_loss(no_virtual_in, 5.0, 1.0)
        self.assertEqual(ternary_mixoe_loss(no_virtual_in, 5.0, 0.0), mixoe_loss(no_virtual_in, 5.0))


class EvaluateLossTestCase(SimpleTestCase):
    def test_terms_recombine_to_total(self):
        rng = np.random.default_rng(4)
        in_batch = TargetedLogits(rng.normal(size=(3, 3)), np.eye(3))
        outliers = rng.normal(size=(3, 3))
        cfg = LossConfig(kind=LossKind.OE, oe_weight=0.5)
        terms = evaluate_loss(cfg, BatchTriplet(in_batch, outlier_logits=outliers))

        self.assertEqual(terms.total, terms.ce + 0.5 * terms.out_term)
        expected = -np.mean(log_softmax(outliers, axis=1).mean(axis=1))
        self.assertAlmostEqual(terms.out_term, expected, places=12)
        self.assertEqual(terms.as_dict()["total"], terms.total)

    def test_outliers_required(self):
        in_batch = TargetedLogits(np.zeros((1, 2)), np.array([[1.0, 0.0]]))
        for kind in (LossKind.OE, LossKind.ENERGY):
            with self.subTest(kind=kind), self.assertRaises(MissingSubBatchError):
                evaluate_loss(LossConfig(kind=kind), BatchTriplet(in_batch))

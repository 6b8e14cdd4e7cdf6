"""
pipeline/verify.py
Self-check suites over the numerics, geometry, side network and accounting.
Each suite returns a list of failure descriptions (empty when it passes),
with enough of the failing instance to reproduce it.

  equivalence   original vs efficient EdgeConv with W′ = W1 − W2
  gradients     analytic grads of every tunable group vs central differences
  init          zero-initialised side network leaves T^L and logits untouched
  elision       backward never enters frozen early blocks; tape = analytic FLOPs
  flop_ratio    EdgeConv transform-stage FLOP ratio equals k
  schedule      cosine_lr endpoints
  geometry      normalization, augmentation bounds, kNN and FPS oracles
  accounting    closed-form parameter counts and strategy ordering
  determinism   seeded streams, model construction and forward passes repeat exactly
  frozen        an optimizer step never touches frozen parameters
  equivariance  permuting patches permutes T^L and leaves logits unchanged
  sharing       a shared group reaches exactly its listed blocks
  grad_modes    elided and full backward give identical tunable grads
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from accounting.costs import (
    CostConfig,
    count_flops,
    count_tunable_params,
    edgeconv_transform_flops,
)
from backbone.transformer import BackboneConfig, TokenSet
from config import (
    AUG_SCALE_RANGE,
    AUG_SHIFT_RANGE,
    DESK_SCALE,
    LR_MAX,
    LR_MIN,
    REFERENCE_SCALE,
    REFINE_FNS,
    WEIGHT_DECAY,
)
from errors import ConfigError, StagError
from geometry.neighbors import PreparedBatch, knn_graph, prepare_cloud, stack_prepared
from geometry.pointcloud import PointCloud, draw_augmentation, normalize_cloud
from geometry.sampling import PatchCenters, farthest_point_sample
from numerics.autodiff import Tape, backward, constant
from numerics.gradcheck import finite_diff_grad, relative_error
from numerics.rng import RngStream
from stag.config import LAYER_TYPES, StagConfig, count_side_params, instances
from stag.forward import bare_forward, stag_forward
from stag.params import build_side_params, group_prefix
from stag.refine import refine_efficient_edgeconv, refine_original_edgeconv
from training.head import head_param_count, prediction_head
from training.loss import cross_entropy
from training.model import StagClassifier
from training.optim import AdamState, adamw_step, zero_grads
from training.schedule import cosine_lr

logger = logging.getLogger(__name__)

WPrimeFn = Callable[[np.ndarray, np.ndarray], np.ndarray]

TINY_BACKBONE = BackboneConfig(d=8, L=4, n=8, heads=2, mlp_ratio=4, group_size=8)
DESK_BACKBONE = BackboneConfig(
    d=DESK_SCALE["d"], L=DESK_SCALE["L"], n=DESK_SCALE["n"], heads=DESK_SCALE["heads"],
    mlp_ratio=DESK_SCALE["mlp_ratio"], group_size=DESK_SCALE["group_size"],
)
REFERENCE_BACKBONE = BackboneConfig(
    d=REFERENCE_SCALE["d"], L=REFERENCE_SCALE["L"], n=REFERENCE_SCALE["n"], heads=REFERENCE_SCALE["heads"],
    mlp_ratio=REFERENCE_SCALE["mlp_ratio"], group_size=REFERENCE_SCALE["group_size"],
)


@dataclass
class SuiteResult:
    name: str
    failures: list[str]

    @property
    def passed(self) -> bool:
        return not self.failures


# ---------------------------------------------------------------------------
# Shared fixtures
# ---------------------------------------------------------------------------

def random_clouds(count: int, points: int, seed: int = 0) -> list[np.ndarray]:
    rng = RngStream(seed, "verify/clouds")
    return [
        normalize_cloud(PointCloud(rng.at(i).generator().normal(size=(points, 3)))).points
        for i in range(count)
    ]


def random_batch(cfg: BackboneConfig, k: Optional[int], count: int = 2, points: int = 64) -> PreparedBatch:
    clouds = random_clouds(count, max(points, cfg.n, cfg.group_size))
    return stack_prepared([prepare_cloud(c, cfg.n, cfg.group_size, k) for c in clouds])


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------

def check_equivalence(
    instances: int = 100,
    w_prime_fn: Optional[WPrimeFn] = None,
    seed: int = 0,
) -> list[str]:
    """Original EdgeConv with W = [W1; W2] against efficient EdgeConv with W′ = w_prime_fn(W1, W2)."""
    w_prime_fn = w_prime_fn or (lambda w1, w2: w1 - w2)
    failures = []
    for i in range(instances):
        gen = RngStream(seed, "verify/equivalence", i).generator()
        k = int(gen.integers(1, 9))
        n = int(gen.integers(k + 1, 33))
        dp = int(gen.integers(1, 17))
        centers = gen.normal(size=(n, 3))
        graph = knn_graph(PatchCenters(centers, np.arange(n)), k)
        h = gen.normal(size=(n, dp))
        w1, w2 = gen.normal(size=(dp, dp)), gen.normal(size=(dp, dp))
        phi_w, phi_b = gen.normal(size=(dp, dp)), gen.normal(size=dp)

        for dtype, tol in ((np.float64, 1e-12), (np.float32, 1e-5)):
            shared = {"phi/weight": constant(phi_w, dtype), "phi/bias": constant(phi_b, dtype)}
            original = refine_original_edgeconv(
                constant(h, dtype), graph, {"w": constant(np.vstack([w1, w2]), dtype), **shared},
            )
            efficient = refine_efficient_edgeconv(
                constant(h, dtype), graph,
                {"w_prime": constant(w_prime_fn(w1, w2), dtype), "w2": constant(w2, dtype), **shared},
            )
            scale = max(1.0, float(np.abs(original.value).max()))
            diff = float(np.abs(original.value - efficient.value).max())
            if diff > tol * scale:
                failures.append(
                    f"instance {i} (seed={seed}, n={n}, d'={dp}, k={k}, {np.dtype(dtype).name}): "
                    f"max |original - efficient| = {diff:.3e}"
                )
                break
    return failures


def _gradient_model(refine_fn: str = "efficient_edgeconv") -> StagClassifier:
    side = StagConfig.build(TINY_BACKBONE.d, TINY_BACKBONE.L, 2, variant="std", refine_fn=refine_fn,
                            d_prime=4, n=TINY_BACKBONE.n)
    model = StagClassifier(TINY_BACKBONE, 3, "stag_std", side, seed=0, precision="double")
    # zero U would make every D and G gradient vanish
    gen = RngStream(0, "verify/nonzero_up").generator()
    for _, node in model.side.store.items("side/U"):
        node.value = gen.normal(scale=0.3, size=node.shape)
    return model


def check_gradients(samples_per_tensor: int = 12, tol: float = 1e-4) -> list[str]:
    """Every tunable group of STAG-std on the tiny config; head tensors on sampled entries."""
    model = _gradient_model()
    batch = random_batch(TINY_BACKBONE, k=2)
    labels = np.array([0, 2])

    def loss_value() -> float:
        return float(cross_entropy(model.forward(batch), labels).value)

    backward(cross_entropy(model.forward(batch), labels))
    failures = []
    gen = RngStream(0, "verify/grad_samples").generator()
    for p in model.tunable_params():
        analytic = p.grad.copy()
        original = p.value.copy()
        if p.name.startswith("side/"):
            idx = np.arange(p.value.size)
        else:
            idx = np.sort(gen.choice(p.value.size, size=min(samples_per_tensor, p.value.size), replace=False))

        def f(sub: np.ndarray) -> float:
            shifted = original.copy()
            shifted.flat[idx] = sub
            p.value = shifted
            return loss_value()

        try:
            numeric = finite_diff_grad(f, original.flat[idx].copy())
        finally:
            p.value = original
        err = relative_error(analytic.flat[idx], numeric)
        if err > tol:
            failures.append(f"{p.name}: relative error {err:.2e} over {idx.size} entries")
    return failures


def check_init_identity() -> list[str]:
    failures = []
    batch_clouds = random_clouds(2, 128)
    for variant, strategy in (("std", "stag_std"), ("sl", "stag_sl")):
        for refine_fn in REFINE_FNS:
            side = StagConfig.build(DESK_BACKBONE.d, DESK_BACKBONE.L, DESK_SCALE["k"], variant=variant,
                                    refine_fn=refine_fn, n=DESK_BACKBONE.n)
            model = StagClassifier(DESK_BACKBONE, 4, strategy, side, seed=0)
            batch = stack_prepared([
                prepare_cloud(c, DESK_BACKBONE.n, DESK_BACKBONE.group_size, side.k) for c in batch_clouds
            ])
            T0, pos = model.backbone.embed(batch.groups, batch.centers)
            with_side = stag_forward(T0, model.backbone, model.side, graph=batch.graph, pos=pos)
            bare = bare_forward(T0, model.backbone, pos=pos)
            token_diff = float(np.abs(with_side.tokens.value - bare.tokens.value).max())
            logits_side = prediction_head(model.backbone.final_norm(with_side), model.head)
            logits_bare = prediction_head(model.backbone.final_norm(bare), model.head)
            logit_diff = float(np.abs(logits_side.value - logits_bare.value).max())
            if token_diff != 0.0 or logit_diff != 0.0:
                failures.append(f"{variant}/{refine_fn}: T^L diff {token_diff:.3e}, logits diff {logit_diff:.3e}")
    return failures


def check_elision(a_values: Optional[list[int]] = None, batch_size: int = 2) -> list[str]:
    """Backward visit log against the analytic inventory for a range of A (std-style sharing)."""
    cfg = DESK_BACKBONE
    a_values = list(range(cfg.L)) if a_values is None else a_values
    k = DESK_SCALE["k"]
    batch = random_batch(cfg, k, count=batch_size)
    labels = np.arange(batch_size) % 4
    failures, totals = [], []

    for A in a_values:
        side = StagConfig.build(cfg.d, cfg.L, k, variant="custom", A=A, n=cfg.n)
        model = StagClassifier(cfg, 4, "stag_custom", side, seed=0)
        with Tape() as tape:
            loss = cross_entropy(model.forward(batch), labels)
        log = backward(loss)

        visited = log.scopes()
        elided = ["tokenizer", "posemb"] + [f"backbone.block{l}" for l in range(1, min(A + 1, cfg.L) + 1)]
        entered = sorted(s for s in elided if s in visited)
        if entered:
            failures.append(f"A={A}: backward entered elided scopes {entered}")
        missing = [f"side.block{l}" for l in range(1, cfg.L + 1) if f"side.block{l}" not in visited]
        if A < cfg.L and missing:
            failures.append(f"A={A}: side scopes never visited: {missing}")

        analytic = count_flops(CostConfig(cfg, 4, batch_size=batch_size, k=k, stag=side), "stag_custom")
        measured_fwd = tape.forward_flops_by_scope()
        if measured_fwd != {s: v for s, v in analytic.forward_by_scope.items() if v}:
            failures.append(f"A={A}: forward FLOPs differ: tape {measured_fwd} vs analytic {analytic.forward_by_scope}")
        measured_bwd = {s: v for s, v in log.backward_flops_by_scope().items() if v}
        expected_bwd = {s: v for s, v in analytic.backward_by_scope.items() if v}
        if measured_bwd != expected_bwd:
            failures.append(f"A={A}: backward FLOPs differ: tape {measured_bwd} vs analytic {expected_bwd}")
        for l in range(1, A + 1):
            if analytic.by_block[l]:
                failures.append(f"A={A}: analytic backward FLOPs of block {l} = {analytic.by_block[l]}")
        totals.append(log.backward_flops())
        logger.info("[VERIFY] elision A=%d | elided backbone blocks 1..%d | backward %d FLOPs",
                    A, min(A + 1, cfg.L), log.backward_flops())

    if any(later >= earlier for earlier, later in zip(totals, totals[1:])):
        failures.append(f"backward FLOPs not strictly decreasing in A: {dict(zip(a_values, totals))}")
    return failures


def check_flop_ratio(ks: tuple[int, ...] = (2, 4, 8, 16), n: int = 32, d_prime: int = 4) -> list[str]:
    failures = []
    gen = RngStream(0, "verify/flop_ratio").generator()
    for k in ks:
        efficient = edgeconv_transform_flops("efficient_edgeconv", n, d_prime, k)
        original = edgeconv_transform_flops("original_edgeconv", n, d_prime, k)
        if original != k * efficient:
            failures.append(f"k={k}: analytic ratio {original / efficient}")

        graph = knn_graph(PatchCenters(gen.normal(size=(n, 3)), np.arange(n)), k)
        h = constant(gen.normal(size=(n, d_prime)))
        phi = {"phi/weight": constant(gen.normal(size=(d_prime, d_prime))), "phi/bias": constant(np.zeros(d_prime))}
        phi_flops = 2 * n * d_prime * d_prime
        with Tape() as tape:
            refine_original_edgeconv(h, graph, {"w": constant(gen.normal(size=(2 * d_prime, d_prime))), **phi})
        if tape.forward_flops() != original + phi_flops:
            failures.append(f"k={k}: tape counted {tape.forward_flops()} FLOPs for original EdgeConv")
        with Tape() as tape:
            refine_efficient_edgeconv(h, graph, {
                "w_prime": constant(gen.normal(size=(d_prime, d_prime))),
                "w2": constant(gen.normal(size=(d_prime, d_prime))), **phi,
            })
        if tape.forward_flops() != efficient + phi_flops:
            failures.append(f"k={k}: tape counted {tape.forward_flops()} FLOPs for efficient EdgeConv")
    return failures


def check_schedule(epochs: int = 300) -> list[str]:
    failures = []
    T = epochs - 1
    if cosine_lr(0, T, LR_MAX, LR_MIN) != LR_MAX:
        failures.append(f"lr(0) = {cosine_lr(0, T, LR_MAX, LR_MIN)!r}")
    if cosine_lr(T, T, LR_MAX, LR_MIN) != LR_MIN:
        failures.append(f"lr(T) = {cosine_lr(T, T, LR_MAX, LR_MIN)!r}")
    return failures


def _fps_oracle(points: np.ndarray, n: int) -> list[int]:
    chosen = [0]
    while len(chosen) < n:
        best, best_dist = -1, -1.0
        for i in range(len(points)):
            if i in chosen:
                continue
            dist = min(float(np.sum((points[i] - points[c]) ** 2)) for c in chosen)
            if dist > best_dist:
                best, best_dist = i, dist
        chosen.append(best)
    return chosen


def check_geometry(instances: int = 20) -> list[str]:
    failures = []
    for i in range(instances):
        gen = RngStream(0, "verify/geometry", i).generator()
        m = int(gen.integers(2, 200))
        raw = gen.normal(size=(m, 3)) * gen.uniform(0.1, 10.0, size=3) + gen.normal(size=3) * 5
        cloud = normalize_cloud(PointCloud(raw))
        norms = np.linalg.norm(cloud.points, axis=1)
        centroid = float(np.abs(cloud.points.mean(axis=0)).max())
        if centroid > 1e-5 or abs(norms.max() - 1.0) > 1e-5 or norms.max() > 1.0:
            failures.append(f"normalize instance {i} (m={m}): centroid {centroid:.2e}, max norm {norms.max():.12f}")
        again = normalize_cloud(cloud).points
        if not np.allclose(again, cloud.points, atol=1e-9):
            failures.append(f"normalize instance {i} (m={m}) is not idempotent")

        scale, shift = draw_augmentation(RngStream(0, "verify/augment", i))
        if np.any(scale < AUG_SCALE_RANGE[0]) or np.any(scale > AUG_SCALE_RANGE[1]):
            failures.append(f"augmentation {i}: scale {scale} outside {AUG_SCALE_RANGE}")
        if np.any(shift < AUG_SHIFT_RANGE[0]) or np.any(shift > AUG_SHIFT_RANGE[1]):
            failures.append(f"augmentation {i}: shift {shift} outside {AUG_SHIFT_RANGE}")

        n = int(gen.integers(2, 65))
        centers = gen.normal(size=(n, 3))
        k = int(gen.integers(1, n))
        graph = knn_graph(PatchCenters(centers, np.arange(n)), k)
        for row in range(n):
            dist = [(float(np.sum((centers[row] - centers[j]) ** 2)), j) for j in range(n) if j != row]
            expected = [j for _, j in sorted(dist)[:k]]
            if list(graph.indices[row]) != expected:
                failures.append(f"kNN instance {i} (n={n}, k={k}) row {row}: {list(graph.indices[row])} != {expected}")
                break

        pts = gen.normal(size=(int(gen.integers(8, 48)), 3))
        count = int(gen.integers(1, 8))
        got = list(farthest_point_sample(pts, count).indices)
        if got != _fps_oracle(pts, count):
            failures.append(f"FPS instance {i} (m={len(pts)}, n={count}): {got} != {_fps_oracle(pts, count)}")
    return failures


def check_accounting() -> list[str]:
    failures = []
    tiny = StagConfig.build(8, 4, 2, variant="std", d_prime=4)
    if count_side_params(tiny) != 128:
        failures.append(f"tiny std side count {count_side_params(tiny)} != 128")
    reference = CostConfig(REFERENCE_BACKBONE, REFERENCE_SCALE["num_classes"], batch_size=REFERENCE_SCALE["batch_size"],
                       k=REFERENCE_SCALE["k"])
    expected = {
        "head_only": 266_511,
        "stag_std": 258_816 + 266_511,
        "stag_sl": 850_368 + 266_511,
    }
    for strategy, value in expected.items():
        got = count_tunable_params(reference, strategy)
        if got != value:
            failures.append(f"reference-scale {strategy}: {got} != {value}")
    if head_param_count(REFERENCE_SCALE["d"], REFERENCE_SCALE["num_classes"]) != 266_511:
        failures.append("reference-scale head count != 266,511")

    order = ["head_only", "stag_std", "stag_sl", "full"]
    params = [count_tunable_params(reference, s) for s in order]
    backward_flops = [count_flops(reference, s).backward for s in order]
    if params != sorted(params) or len(set(params)) != len(params):
        failures.append(f"tunable ordering broken: {dict(zip(order, params))}")
    if backward_flops != sorted(backward_flops) or len(set(backward_flops)) != len(backward_flops):
        failures.append(f"backward ordering broken: {dict(zip(order, backward_flops))}")
    return failures


def check_determinism() -> list[str]:
    """Same (seed, label, counter) gives the same draws; same seed gives the same model and logits."""
    failures = []
    a = RngStream(5, "verify/rng", 3).generator().normal(size=16)
    if not np.array_equal(a, RngStream(5, "verify/rng", 3).generator().normal(size=16)):
        failures.append("RngStream(5, 'verify/rng', 3) is not reproducible")
    for other in (RngStream(5, "verify/rng", 4), RngStream(5, "verify/other", 3), RngStream(6, "verify/rng", 3)):
        if np.array_equal(a, other.generator().normal(size=16)):
            failures.append(f"stream {other} repeats the draws of RngStream(5, 'verify/rng', 3)")

    side = StagConfig.build(TINY_BACKBONE.d, TINY_BACKBONE.L, 2, d_prime=4, n=TINY_BACKBONE.n)
    first, second = (StagClassifier(TINY_BACKBONE, 3, "stag_std", side, seed=1) for _ in range(2))
    digests = ["".join(s.digest() for s in m.stores()) for m in (first, second)]
    if digests[0] != digests[1]:
        failures.append("two models built from seed 1 hold different parameters")
    batch = random_batch(TINY_BACKBONE, k=2)
    logits = [m.forward(batch).value.tobytes() for m in (first, second, first)]
    if len(set(logits)) != 1:
        failures.append("repeated forward passes of identical models differ")
    return failures


def check_frozen_step() -> list[str]:
    """One optimizer step moves tunable parameters and leaves every frozen one bit-identical."""
    failures = []
    batch = random_batch(TINY_BACKBONE, k=2)
    labels = np.array([0, 2])
    for strategy in ("head_only", "stag_std", "stag_sl"):
        side = None
        if strategy.startswith("stag_"):
            side = StagConfig.build(TINY_BACKBONE.d, TINY_BACKBONE.L, 2, variant=strategy[5:], d_prime=4,
                                    n=TINY_BACKBONE.n)
        model = StagClassifier(TINY_BACKBONE, 3, strategy, side, seed=0)
        frozen = model.frozen_digest()
        tunable = model.state_dict()
        backward(cross_entropy(model.forward(batch), labels))
        adamw_step(model.tunable_params(), AdamState(), LR_MAX, WEIGHT_DECAY)
        if model.frozen_digest() != frozen:
            failures.append(f"{strategy}: a frozen parameter changed during an optimizer step")
        after = model.state_dict()
        if all(np.array_equal(tunable[name], after[name]) for name in tunable):
            failures.append(f"{strategy}: no tunable parameter moved")
    return failures


def check_equivariance(tol: float = 1e-9) -> list[str]:
    """Permuting patches (tokens, centers, graph) permutes T^L and leaves the logits alone."""
    failures = []
    model = _gradient_model()
    batch = random_batch(TINY_BACKBONE, k=2)
    T0, pos = model.backbone.embed(batch.groups, batch.centers)
    out = stag_forward(T0, model.backbone, model.side, pos=pos)
    logits = prediction_head(model.backbone.final_norm(out), model.head).value
    for trial in range(5):
        perm = RngStream(0, "verify/permutation", trial).generator().permutation(TINY_BACKBONE.n)
        T0_perm = TokenSet(constant(T0.tokens.value[:, perm]), batch.centers[:, perm])
        permuted = stag_forward(T0_perm, model.backbone, model.side, pos=constant(pos.value[:, perm]))
        token_diff = float(np.abs(permuted.tokens.value - out.tokens.value[:, perm]).max())
        logit_diff = float(np.abs(
            prediction_head(model.backbone.final_norm(permuted), model.head).value - logits
        ).max())
        if token_diff > tol or logit_diff > tol:
            failures.append(f"permutation {perm.tolist()}: T^L diff {token_diff:.3e}, logits diff {logit_diff:.3e}")
    return failures


def _layer_view(side, layer: str, block: int) -> np.ndarray:
    if layer == "D":
        nodes = side.down(block)
    elif layer == "U":
        nodes = side.up(block)
    else:
        nodes = tuple(side.refine(block).values())
    return np.concatenate([node.value.ravel() for node in nodes])


def check_sharing(L: int = 12) -> list[str]:
    """Perturbing one shared group changes exactly the blocks listed in it."""
    failures = []
    for variant in ("std", "sl", "unshared"):
        cfg = StagConfig.build(8, L, 2, variant=variant, d_prime=4)
        side = build_side_params(cfg, RngStream(0, "verify/sharing"), np.float64)
        for layer in LAYER_TYPES:
            blocks = instances(layer, cfg.L, cfg.A, cfg.refine_fn)
            for index, group in enumerate(cfg.sharing[layer]):
                before = {b: _layer_view(side, layer, b) for b in blocks}
                nodes = [node for _, node in side.store.items(group_prefix(layer, index) + "/")]
                for node in nodes:
                    node.value = node.value + 1.0
                changed = [b for b in blocks if not np.array_equal(before[b], _layer_view(side, layer, b))]
                for node in nodes:
                    node.value = node.value - 1.0
                if changed != sorted(group):
                    failures.append(f"{variant} {layer} group {index} {group}: perturbation reached blocks {changed}")
    return failures


def check_grad_modes() -> list[str]:
    """Tunable grads are identical with and without elision; only the visit log differs."""
    failures = []
    model = _gradient_model()
    batch = random_batch(TINY_BACKBONE, k=2)
    labels = np.array([1, 0])
    params = model.tunable_params()

    elided_log = backward(cross_entropy(model.forward(batch), labels))
    elided = {p.name: p.grad.copy() for p in params}
    zero_grads(params)
    full_log = backward(cross_entropy(model.forward(batch), labels), elide=False)
    for p in params:
        if not np.array_equal(p.grad, elided[p.name]):
            diff = float(np.abs(p.grad - elided[p.name]).max())
            failures.append(f"{p.name}: grads differ between elided and full backward (max {diff:.3e})")
    if len(full_log.visits) <= len(elided_log.visits):
        failures.append(f"full backward visited {len(full_log.visits)} nodes, elided {len(elided_log.visits)}")
    if any(node.grad is None for node in model.backbone.store):
        failures.append("full backward left frozen backbone parameters without grads")
    zero_grads(list(model.backbone.store))
    return failures


SUITES: dict[str, Callable[[], list[str]]] = {
    "equivalence":  check_equivalence,
    "gradients":    check_gradients,
    "init":         check_init_identity,
    "elision":      check_elision,
    "flop_ratio":   check_flop_ratio,
    "schedule":     check_schedule,
    "geometry":     check_geometry,
    "accounting":   check_accounting,
    "determinism":  check_determinism,
    "frozen":       check_frozen_step,
    "equivariance": check_equivariance,
    "sharing":      check_sharing,
    "grad_modes":   check_grad_modes,
}


def verify(suites: Optional[list[str]] = None, w_prime_fn: Optional[WPrimeFn] = None) -> list[SuiteResult]:
    """Run the named suites (all by default); an exception inside a suite counts as its failure."""
    names = list(SUITES) if suites is None else suites
    unknown = [s for s in names if s not in SUITES]
    if unknown:
        raise ConfigError(f"unknown verify suite(s) {unknown}; choose from {list(SUITES)}")

    results = []
    for name in names:
        try:
            if name == "equivalence":
                failures = check_equivalence(w_prime_fn=w_prime_fn)
            else:
                failures = SUITES[name]()
        except StagError as exc:
            failures = [f"{type(exc).__name__}: {exc}"]
        result = SuiteResult(name, failures)
        if result.passed:
            logger.info("[VERIFY] %-12s | PASS", name)
        else:
            for failure in failures:
                logger.error("[VERIFY] %-12s | FAIL %s", name, failure)
        results.append(result)
    return results


def run() -> bool:
    return all(r.passed for r in verify())


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO, format="%(asctime)s  %(message)s")
    raise SystemExit(0 if run() else 1)

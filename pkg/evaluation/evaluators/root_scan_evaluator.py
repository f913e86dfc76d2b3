"""
Independent judges of the analytic verdicts
Root-scan oracle for the stability test, fluid simulation for the Hopf criticality
"""
import argparse
import json
import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from tqdm import tqdm

sys.path.append(str(Path(__file__).parent.parent.parent))
from config.config import DEFAULT_CAPACITY, DEFAULT_SEED, OUTPUT_DIR, SHOW_PROGRESS
from src.fluid_sim import OutcomeKind, SimConfig, integrate
from src.hopf import Criticality, analyze, g_tilde_mu2
from src.model import ModelParams, rho_to_b
from src.stability import critical_kappa, is_stable, rightmost_root_scan


def random_parameter_sets(n: int, seed: int = DEFAULT_SEED,
                          exclusion: float = 0.05) -> List[ModelParams]:
    """Random configurations with κ kept at least `exclusion` away from κc"""
    rng = np.random.default_rng(seed)
    sets = []
    while len(sets) < n:
        a = float(rng.uniform(0.2, 3.0))
        b = 0.0 if rng.random() < 0.2 else float(10 ** rng.uniform(-3, 0.3))
        tau1, tau2 = (float(x) for x in rng.uniform(1.0, 100.0, size=2))
        base = ModelParams(a=a, b=b, gamma=float(rng.uniform(0.8, 1.0)),
                           capacity=DEFAULT_CAPACITY, tau1=tau1, tau2=tau2)
        factor = float(rng.uniform(0.3, 1.8))
        if abs(factor - 1.0) < exclusion:
            continue
        sets.append(base.with_kappa(factor * critical_kappa(base).kappa_c))
    return sets


def params_record(params: ModelParams) -> Dict[str, float]:
    return {"a": params.a, "b": params.b, "gamma": params.gamma,
            "capacity": params.capacity, "tau1": params.tau1, "tau2": params.tau2,
            "kappa": params.kappa, "sigma_sq": params.sigma_sq}


class RootScanEvaluator:
    """Checks the closed-form stability verdict against the rightmost characteristic root"""

    def evaluate(self, params: ModelParams) -> Dict[str, Any]:
        verdict = is_stable(params)
        roots = rightmost_root_scan(params)
        rightmost = roots[0].real if roots else None
        oracle_stable = rightmost is None or rightmost < 0.0
        return {
            "params": params_record(params),
            "margin": verdict.margin,
            "theorem_stable": verdict.stable,
            "oracle_stable": oracle_stable,
            "rightmost_real": rightmost,
            "roots_found": len(roots),
            "agree": verdict.stable == oracle_stable,
        }

    def evaluate_dataset(self, param_sets: List[ModelParams], output_file: Optional[str] = None,
                         progress: bool = SHOW_PROGRESS) -> List[Dict[str, Any]]:
        results = []
        for idx, params in enumerate(tqdm(param_sets, desc="root scan", disable=not progress)):
            record = self.evaluate(params)
            record["id"] = idx
            results.append(record)
        if output_file:
            _write_json(results, output_file)
        return results


def concordance_sets(n: int, seed: int = DEFAULT_SEED, min_quotient: float = 10.0,
                     a: float = 1.0) -> List[ModelParams]:
    """Random with-queue sets whose criticality is clearly away from the degenerate line"""
    rng = np.random.default_rng(seed)
    sets = []
    while len(sets) < n:
        theta = float(rng.uniform(math.pi / 6, 5 * math.pi / 6))
        rho = float(rng.uniform(0.5, 0.95))
        mu2 = g_tilde_mu2(theta, rho)
        # g_tilde_mu2 at a = C = 1 is the closed-form quotient up to a positive factor
        quotient = mu2 * math.sin(theta) * (1 + rho) / (2 * math.pi)
        if abs(quotient) < min_quotient:
            continue
        tau1 = float(rng.uniform(5.0, 20.0))
        tau2 = tau1 * (math.pi - theta) / theta
        b = rho_to_b(rho)
        sets.append(ModelParams(a=a, b=b, capacity=DEFAULT_CAPACITY, tau1=tau1, tau2=tau2))
    return sets


class ConcordanceEvaluator:
    """Runs the fluid model slightly past κc and compares with the Hopf verdict"""

    def __init__(self, overshoot: float = 0.02, growth_times: float = 15.0,
                 small_fraction: float = 0.5):
        self.overshoot = overshoot
        self.growth_times = growth_times
        self.small_fraction = small_fraction

    def evaluate(self, params: ModelParams) -> Dict[str, Any]:
        params_kc, eq, hp, nf = analyze(params)
        kappa = hp.kappa_c * (1.0 + self.overshoot)
        growth_rate = hp.alpha_prime * (kappa - hp.kappa_c)
        t_end = max(40.0 * params.tau_sum, self.growth_times / growth_rate)
        trace = integrate(SimConfig(params=params.with_kappa(kappa), t_end=t_end))
        outcome = trace.outcome

        cycling = outcome.kind is OutcomeKind.LIMIT_CYCLE
        small_cycle = cycling and outcome.amplitude < self.small_fraction * eq.r_star
        large_excursion = (outcome.kind is OutcomeKind.ESCAPED
                           or (cycling and not small_cycle))
        if nf.criticality is Criticality.SUPERCRITICAL:
            agree = small_cycle
        elif nf.criticality is Criticality.SUBCRITICAL:
            agree = large_excursion
        else:
            agree = False
        return {
            "params": params_record(params_kc),
            "kappa": kappa,
            "mu2": nf.mu2,
            "criticality": nf.criticality.value,
            "outcome": outcome.kind.value,
            "amplitude": outcome.amplitude,
            "saturated": trace.saturated,
            "agree": agree,
        }

    def evaluate_dataset(self, param_sets: List[ModelParams], output_file: Optional[str] = None,
                         progress: bool = SHOW_PROGRESS) -> List[Dict[str, Any]]:
        results = []
        for idx, params in enumerate(tqdm(param_sets, desc="concordance", disable=not progress)):
            record = self.evaluate(params)
            record["id"] = idx
            results.append(record)
        if output_file:
            _write_json(results, output_file)
        return results


def _write_json(results: List[Dict[str, Any]], output_file: str) -> None:
    Path(output_file).parent.mkdir(parents=True, exist_ok=True)
    with open(output_file, "w", encoding="utf-8") as f:
        json.dump(results, f, indent=2)
    print(f"[SUCCESS] Results saved to {output_file}")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Judge analytic verdicts with independent numerics")
    parser.add_argument("--judge", choices=["root-scan", "simulation"], default="root-scan",
                        help="Oracle to run")
    parser.add_argument("--sets", type=int, default=200, help="Number of random parameter sets")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED, help="Sampling seed")
    parser.add_argument("--output", type=str, default=None, help="Output JSON file")
    args = parser.parse_args()

    output = args.output or str(OUTPUT_DIR / f"{args.judge}_judgements.json")
    if args.judge == "root-scan":
        evaluator = RootScanEvaluator()
        records = evaluator.evaluate_dataset(random_parameter_sets(args.sets, args.seed), output)
    else:
        evaluator = ConcordanceEvaluator()
        records = evaluator.evaluate_dataset(concordance_sets(args.sets, args.seed), output)

    agreed = sum(1 for r in records if r["agree"])
    print(f"[INFO] Agreement: {agreed}/{len(records)}")

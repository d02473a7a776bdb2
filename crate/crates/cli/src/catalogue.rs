//! Experiment kinds, the statement each one exercises, and the shipped default configs.

pub struct Entry {
    pub name: &'static str,
    /// Statement under test.
    pub statement: &'static str,
    /// What the run computes and asserts.
    pub run: &'static str,
    pub fixture: &'static str,
}

pub const CATALOGUE: &[Entry] = &[
    Entry {
        name: "solve1d",
        statement: "Explicit 1D solution formula: on g0 = {1}^perp the compressed inverse (i* a i)^-1 is phi -> a^-1 phi - a^-1 <a^-1 phi>/<a^-1>.",
        run: "Solves the Dirichlet problem with flux right-hand side div r on each mesh and compares grad u with the closed formula applied to -i* r.",
        fixture: include_str!("../fixtures/solve1d.cfg"),
    },
    Entry {
        name: "hconv",
        statement: "Definition of H-convergence: a_n H-converges to a when u_n -> u weakly and a_n grad u_n -> a grad u weakly for every right-hand side f.",
        run: "Dirichlet solves for a_n and for the candidate limit; reports probe pairing gaps of solutions and fluxes over n.",
        fixture: include_str!("../fixtures/hconv.cfg"),
    },
    Entry {
        name: "laminate2d",
        statement: "H-limit of laminates: a_n(x) = alpha(n x1) I H-converges to diag(harmonic mean, arithmetic mean).",
        run: "2D Dirichlet solves for a two-phase laminate against diag(<alpha^-1>^-1, <alpha>).",
        fixture: include_str!("../fixtures/laminate2d.cfg"),
    },
    Entry {
        name: "cell",
        statement: "Periodic homogenisation: the homogenised coefficient a_hom xi = integral over Y of a (xi + grad w_xi), with w_xi the periodic corrector solving the cell problem.",
        run: "Solves the cell problems on refining unit-cell grids and compares a_hom with the laminate, Dykhne or constant closed forms.",
        fixture: include_str!("../fixtures/cell.cfg"),
    },
    Entry {
        name: "qdind",
        statement: "1D characterisation of H-convergence: a_n H-converges iff a_n^-1 converges weakly, with the harmonic mean as limit.",
        run: "WOT gap of the multipliers a_n^-1 set against the gaps of the compressed inverses and flux maps on g0.",
        fixture: include_str!("../fixtures/qdind.cfg"),
    },
    Entry {
        name: "schur-gap",
        statement: "Schur topology tau(H0, H1): H-convergence is convergence of a00^-1, a00^-1 a01, a10 a00^-1 and a11 - a10 a00^-1 a01 in the weak operator topology, with H0 = g0.",
        run: "Relative WOT gaps of the four Schur maps of a_n against those of the candidate limit over n.",
        fixture: include_str!("../fixtures/schur_gap.cfg"),
    },
    Entry {
        name: "divcurl",
        statement: "div-curl lemma: if q_n = grad u_n and r_n converge weakly and div r_n is precompact in H^-1, then the products <q_n, r_n> converge tested against cutoffs.",
        run: "Cutoff-weighted pairings for compliant sequences, or for the oscillating-gradient counterexample where the gap persists.",
        fixture: include_str!("../fixtures/divcurl.cfg"),
    },
    Entry {
        name: "divtest",
        statement: "Divergence test: for weakly convergent r_n, the g0-projections converge strongly iff div r_n is precompact in H^-1.",
        run: "Strong g0-projection gap and H^-1 divergence gap on the shipped fixtures; both must vanish together or persist together.",
        fixture: include_str!("../fixtures/divtest.cfg"),
    },
    Entry {
        name: "evo",
        statement: "Abstract Schur equivalence: with A skew-selfadjoint, T_n -> T in tau(ker A, ran A) exactly when (T_n + A)^-1 -> (T + A)^-1 in the weak operator topology.",
        run: "Tau gaps and resolvent WOT gaps for a synthetic perturbation family or the grid-backed two-scale family.",
        fixture: include_str!("../fixtures/evo.cfg"),
    },
    Entry {
        name: "recover",
        statement: "Well-posedness of T + A for Re T >= c with resolvent bound 1/c, and recovery of T from (T + A)^-1 in the class F(alpha, beta).",
        run: "Random (T, A) pairs: resolvent norm bounds, round trip T -> (T + A)^-1 -> T, membership of the recovered T.",
        fixture: include_str!("../fixtures/recover.cfg"),
    },
    Entry {
        name: "thermo",
        statement: "Thermoelasticity as an evolutionary system: the congruence that decouples the thermal block and homogenisation of the resolvents under H-convergence of the elastic coefficient.",
        run: "Resolvent WOT gaps and tau gaps of C_n for a 1D laminate over n, for each coupling gamma.",
        fixture: include_str!("../fixtures/thermo.cfg"),
    },
    Entry {
        name: "maxwell",
        statement: "Homogenisation of Maxwell's equations: resolvents converge when lambda eps_n + sigma_n and mu_n H-converge.",
        run: "Resolvent WOT gaps of the Yee-grid Maxwell system for laminate coefficients against the layered limits.",
        fixture: include_str!("../fixtures/maxwell.cfg"),
    },
    Entry {
        name: "helmholtz",
        statement: "Helmholtz decomposition: L2 vector fields split orthogonally into gradients, curls and a finite-dimensional harmonic part, trivial on a box.",
        run: "Decomposes the Yee edge (Dirichlet) and face (Neumann) spaces on n^3 boxes and checks dimensions, orthogonality and reassembly.",
        fixture: include_str!("../fixtures/helmholtz.cfg"),
    },
];

pub fn find(name: &str) -> Option<&'static Entry> {
    CATALOGUE.iter().find(|e| e.name == name)
}

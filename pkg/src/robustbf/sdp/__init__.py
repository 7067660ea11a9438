"""Hermitian block SDP modelling and interior-point solver."""
from robustbf.sdp.problem import (Congruence, LinearConstraint, LmiConstraint, ProblemError,
                                  SdpProblem, StandardForm)
from robustbf.sdp.solver import ResidualReport, SdpSolution, SolverConfig, check_solution, solve_sdp

__all__ = ["Congruence", "LinearConstraint", "LmiConstraint", "ProblemError", "SdpProblem",
           "StandardForm", "SdpSolution", "SolverConfig", "solve_sdp", "check_solution",
           "ResidualReport"]

"""Refinement typing and validity checking."""
from .formula import Formula, smt_query
from .solver import Checker, ValidityResult, Verdict, check_validity, default_checker, set_default_checker
from .typing import (check_obligation, check_type, check_type_result, encode_context, inhabitation, sort_of,
                     subtype_obligation, type_expr, wf_type)

__all__ = ["Formula", "smt_query", "Checker", "ValidityResult", "Verdict", "check_validity", "default_checker",
           "set_default_checker", "check_obligation", "check_type", "check_type_result", "encode_context",
           "inhabitation", "sort_of", "subtype_obligation", "type_expr", "wf_type"]

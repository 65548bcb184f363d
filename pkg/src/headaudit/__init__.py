"""HTTP security header auditing toolkit.

Scans a site over plain HTTP and HTTPS, records the redirect story, parses
the security-relevant response headers, inventories landing-page
subresources, and turns all of that evidence into twelve per-category test
results, a 0-135 score, and a letter grade. Batch scanning, aggregate
reporting, an HTTP service, and a CLI sit on top of that core.
"""

__version__ = "0.1.0"

from .scoring import Category, GRADE_BANDS, ScanReport, TestResult, assign_grade, compute_score

__all__ = [
    "Category",
    "GRADE_BANDS",
    "ScanReport",
    "TestResult",
    "assign_grade",
    "compute_score",
    "__version__",
]

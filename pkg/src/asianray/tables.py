"""Published benchmark tables and their recomputation.

The golden values are stored exactly as printed (strings keep the printed
digits). ``None`` marks a blank cell. Each recomputed row carries the printed
value, the computed value and their absolute difference.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .bs_rate import beta_rate, solve_fwd_rate
from .domain_model import Constant, ContractSpec, Family, ModelSpec, Side
from .mc_oracle import McConfig, price_mc
from .pricing import floating_price_approx

# Fixed strike, K >= S0: (K/S0, tau, c, beta_c, J_fwd).
TABLE_1: tuple[tuple[str, ...], ...] = (
    ("1.0", "0.0", None, "0.0", "0.0"),
    ("1.1", "0.0", None, "0.76340", "0.01337"),
    ("1.2", "0.0", None, "1.06487", "0.04813"),
    ("1.3", "0.0", None, "1.2873", "0.09818"),
    ("1.4", "0.0", None, "1.46814", "0.15932"),
    ("1.5", "0.0", None, "1.62213", "0.22854"),
    ("1.0", "0.25", "0", "0", "0.0"),
    ("1.1", "0.25", "0.189261", "0.5392", "0.00904"),
    ("1.2", "0.25", "0.35968", "0.751447", "0.03294"),
    ("1.3", "0.25", "0.514475", "0.907739", "0.06794"),
    ("1.4", "0.25", "0.65612", "1.03462", "0.11132"),
    ("1.5", "0.25", "0.786554", "1.14257", "0.16109"),
    ("1.0", "0.5", "0", "0", "0.0"),
    ("1.1", "0.5", "0.142709", "0.38003", "0.00681"),
    ("1.2", "0.5", "0.272543", "0.52806", "0.02487"),
    ("1.3", "0.5", "0.391598", "0.636173", "0.05146"),
    ("1.4", "0.5", "0.501497", "0.723307", "0.08455"),
    ("1.5", "0.5", "0.603527", "0.796955", "0.12267"),
    ("1.0", "0.75", "0", "0", "0.0"),
    ("1.1", "0.75", "0.114339", "0.239673", "0.09531"),
    ("1.2", "0.75", "0.218666", "0.332169", "0.18232"),
    ("1.3", "0.75", "0.314588", "0.399221", "0.26236"),
    ("1.4", "0.75", "0.403356", "0.452895", "0.33647"),
    ("1.5", "0.75", "0.485962", "0.497977", "0.40546"),
)

# Fixed strike, K <= S0: (K/S0, tau, c, xi_c, J_fwd).
TABLE_2: tuple[tuple[str, ...], ...] = (
    ("1.0", "0.0", None, "0.0", "0"),
    ("0.9", "0.0", None, "0.39334", "0.01701"),
    ("0.8", "0.0", None, "0.56555", "0.07823"),
    ("0.7", "0.0", None, "0.70509", "0.20580"),
    ("0.6", "0.0", None, "0.83002", "0.43735"),
    ("0.5", "0.0", None, "0.94775", "0.84161"),
    ("1.0", "0.25", "0", "0", "0"),
    ("0.9", "0.25", "-0.21239", "0.278525", "0.01116"),
    ("0.8", "0.25", "-0.453789", "0.401176", "0.05035"),
    ("0.7", "0.25", "-0.732556", "0.5013", "0.12950"),
    ("0.6", "0.25", "-1.06111", "0.591885", "0.26765"),
    ("0.5", "0.25", "-1.45904", "0.678576", "0.49724"),
    ("1.0", "0.5", "0", "0", "0"),
    ("0.9", "0.5", "-0.158352", "0.197664", "0.00834"),
    ("0.8", "0.5", "-0.336107", "0.285876", "0.03745"),
    ("0.7", "0.5", "-0.538556", "0.358898", "0.09584"),
    ("0.6", "0.5", "-0.773475", "0.426057", "0.19694"),
    ("0.5", "0.5", "-1.05297", "0.491616", "0.36342"),
    ("1.0", "0.75", "0", "0", "0.0"),
    ("0.9", "0.75", "-0.126473", "0.125404", "0.00667"),
    ("0.8", "0.75", "-0.267951", "0.181998", "0.02989"),
    ("0.7", "0.75", "-0.428465", "0.229381", "0.07639"),
    ("0.6", "0.75", "-0.613921", "0.273526", "0.15672"),
    ("0.5", "0.75", "-0.833483", "0.317279", "0.28867"),
)

# Floating strike benchmark, kappa = 1, S0 = 100, r = 0.1, q = 0, T = 1:
# (sigma, tau, C_f, TCL, MC). The TCL column is an external reference.
TABLE_3: tuple[tuple[str, ...], ...] = (
    ("0.2", "305/365", "2.13005", "2.304166", "2.264616"),
    ("0.3", "305/365", "2.96462", "3.223310", "3.171457"),
    ("0.4", "305/365", "3.80438", "4.142445", "4.084590"),
    ("0.5", "305/365", "4.64622", "5.058229", "4.999982"),
    ("0.6", "305/365", "5.48911", "5.969642", "5.908669"),
    ("0.2", "265/365", "2.92733", "3.147266", "3.105413"),
    ("0.3", "265/365", "3.99604", "4.320233", "4.268604"),
    ("0.4", "265/365", "5.07577", "5.493439", "5.493439"),
    ("0.5", "265/365", "6.15994", "6.660697", "6.620761"),
    ("0.6", "265/365", "7.24634", "7.821191", "7.790436"),
    ("0.2", "183/365", "4.33054", "4.609475", "4.554739"),
    ("0.3", "183/365", "5.74906", "6.152161", "6.096058"),
    ("0.4", "183/365", "7.19388", "7.696422", "7.661532"),
    ("0.5", "183/365", "8.64938", "9.231254", "9.228435"),
    ("0.6", "183/365", "10.1102", "10.76042", "10.798441"),
)

TABLE_3_MARKET = {"s0": 100.0, "r": 0.1, "q": 0.0, "t": 1.0, "kappa": 1.0}

NOTE_T1_J_075 = (
    "printed J equals log(K/S0); compared against the value recomputed from the "
    "printed beta_c"
)
NOTE_T3_MC_265_04 = "printed MC value repeats the TCL value"


@dataclass(frozen=True)
class Column:
    name: str
    printed: str | None
    computed: float | None

    @property
    def printed_value(self) -> float | None:
        return None if self.printed is None else float(self.printed)

    @property
    def abs_diff(self) -> float | None:
        if self.printed is None or self.computed is None:
            return None
        return abs(self.computed - float(self.printed))


@dataclass(frozen=True)
class TableRow:
    """One recomputed row: identifying inputs, compared columns and a note."""

    inputs: dict[str, str]
    columns: tuple[Column, ...]
    note: str = ""
    extra: dict[str, float] | None = None

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)


def parse_fraction(text: str) -> float:
    """``"305/365"`` or ``"0.25"`` as a float."""
    return float(Fraction(text))


def _fixed_rows(table, param_name: str) -> list[TableRow]:
    rows = []
    for k, tau, c, param, j in table:
        res = solve_fwd_rate(float(k), float(tau))
        note = ""
        reference = j
        if table is TABLE_1 and tau == "0.75" and k != "1.0":
            # the printed J column is not usable here; recompute it from the
            # printed beta_c, which is itself checked in the beta_c column
            _, j_from_printed = beta_rate(float(param), float(tau))
            reference = repr(j_from_printed)
            note = NOTE_T1_J_075 + f" (printed {j})"
        rows.append(TableRow(
            {"k_over_s0": k, "tau": tau},
            (
                Column("c", c, res.c),
                Column(param_name, param, res.beta_or_xi),
                Column("j_fwd", reference, res.j_fwd),
            ),
            note,
        ))
    return rows


def table_1() -> list[TableRow]:
    """Recompute the fixed strike table on the call side."""
    return _fixed_rows(TABLE_1, "beta_c")


def table_2() -> list[TableRow]:
    """Recompute the fixed strike table on the put side."""
    return _fixed_rows(TABLE_2, "xi_c")


def table_3(mc: McConfig | None = None) -> list[TableRow]:
    """Recompute the floating strike benchmark.

    Args:
        mc: When given, every row also gets a Monte Carlo price with this
            configuration, compared against the printed MC column.
    """
    m = TABLE_3_MARKET
    rows = []
    for sig, tau_s, cf, tcl, mc_printed in TABLE_3:
        tau = parse_fraction(tau_s)
        model = ModelSpec(m["s0"], m["r"], m["q"], Constant(float(sig)))
        approx = floating_price_approx(model, m["kappa"], tau, m["t"])
        cols = [Column("c_f", cf, approx)]
        extra = None
        if mc is not None:
            contract = ContractSpec(Family.FLOATING, Side.CALL, m["t"], kappa=m["kappa"], tau=tau)
            res = price_mc(model, contract, mc)
            cols.append(Column("mc", mc_printed, res.price))
            extra = {
                "mc_std_error": res.std_error,
                "mc_rel_diff": res.price / float(mc_printed) - 1.0,
            }
        note = NOTE_T3_MC_265_04 if mc_printed == tcl else ""
        rows.append(TableRow({"sigma": sig, "tau": tau_s, "tcl": tcl, "published_mc": mc_printed},
                             tuple(cols), note, extra))
    return rows


def rows_to_records(rows: list[TableRow]) -> list[dict[str, object]]:
    """Flatten rows into ordered dicts: inputs, then per column computed, printed
    and abs_diff, then extras and the note."""
    out = []
    for row in rows:
        rec: dict[str, object] = dict(row.inputs)
        for col in row.columns:
            rec[col.name] = col.computed
            rec[f"published_{col.name}"] = col.printed_value
            rec[f"abs_diff_{col.name}"] = col.abs_diff
        if row.extra:
            rec.update(row.extra)
        rec["note"] = row.note
        out.append(rec)
    return out

"""Unit tests for the LaTeX and LP writers."""

import pytest

from builders import activation, bus_entries, make_store
from workforce_milp.core.assemble import build_model
from workforce_milp.core.model import ModelIR, VariableFamily
from workforce_milp.core.render import (
    LP_LINE_WIDTH,
    escape_latex,
    latex_symbol,
    render_latex,
    render_lp,
)


@pytest.fixture
def bus_model(shift_graph) -> ModelIR:
    return build_model(
        make_store(bus_entries()),
        activation("Minimise total number of employees"),
        shift_graph,
        "bus drivers",
    )


def small_model() -> ModelIR:
    """Maximisation with a bounded integer, a free integer and a binary."""
    model = ModelIR("demo", "shift-scheduling")
    model.add_set("S", [1, 2], "shifts")
    model.add_family(VariableFamily("x", ("S",), "nonneg-integer", description="staff on shift s"))
    model.add_family(VariableFamily("z", ("S",), "binary", description="shift s is open"))
    x1 = model.add_variable("x", (1,), upper=5)
    x2 = model.add_variable("x", (2,))
    z1 = model.add_variable("z", (1,))
    model.add_constraint("link", {x1: 1, z1: -5}, "<=", 0)
    model.add_constraint("pick", {x1: 1, x2: 2}, ">=", 3)
    model.set_objective("maximize", {x1: 2, x2: -1.5, z1: -1})
    return model


def test_escape_latex():
    assert escape_latex("a_b & 50% of $3") == r"a\_b \& 50\% of \$3"
    assert escape_latex("{x}~^") == r"\{x\}\textasciitilde{}\textasciicircum{}"


def test_latex_symbol():
    assert latex_symbol("T_max") == "T_{max}"
    assert latex_symbol("B_1") == "B_{1}"
    assert latex_symbol("x") == "x"
    assert latex_symbol("lb") == r"\mathit{lb}"


def test_bus_latex(bus_model: ModelIR):
    """Test that every section and every parameter value is printed."""
    text = render_latex(bus_model)
    assert text.startswith("\\section*{Model: bus\\_drivers}\n")
    for heading in ("Sets", "Parameters", "Decision Variables", "Objective", "Constraints"):
        assert f"\\subsection*{{{heading}}}" in text
    assert text.index("Sets") < text.index("Parameters") < text.index("Objective")
    assert "\\item $T = \\{1, 2, 3, 4, 5, 6\\}$: periods" in text
    assert "\\[ T_{max} = 1440 \\quad \\text{planning horizon} \\]" in text
    assert "\\[ \\mathit{lb}_{t} = (4, 8, 10, 7, 12, 4) \\quad" in text
    assert "\\begin{pmatrix}\n1 & 0 & 0 & 0 & 0 & 1 \\\\\n" in text
    assert "\\item $x_{s} \\in \\mathbb{Z}_{\\geq 0}$, $s \\in S$" in text
    assert "\\min \\quad & x_{1} + x_{2} + x_{3} + x_{4} + x_{5} + x_{6}" in text
    assert "x_{1} + x_{6} &\\geq 4 && \\text{(demand\\_1)}" in text
    assert text.endswith("\\end{align*}\n")


def test_latex_signs_and_tensors(shift_graph):
    text = render_latex(small_model())
    assert "\\max \\quad & 2 x_{1} - 1.5 x_{2} - z_{1}" in text
    assert "x_{1} - 5 z_{1} &\\leq 0 && \\text{(link)}" in text
    assert "\\item $z_{s} \\in \\{0, 1\\}$" in text

    entries = bus_entries()
    entries["overtime policy"] = {"value": {"max_overtime_periods": 1}}
    model = build_model(make_store(entries), activation("Overtimes"), shift_graph)
    text = render_latex(model)
    assert "\\[ v_{\\cdot,0,\\cdot} = \\begin{pmatrix}" in text
    assert "\\text{overtime coverage, $o = 1$}" in text


def test_bus_lp(bus_model: ModelIR):
    """Test the LP file layout."""
    lines = render_lp(bus_model).splitlines()
    assert lines[:5] == [
        "\\ Model bus_drivers",
        "\\ Problem type: shift-scheduling",
        "Minimize",
        " obj: x_1 + x_2 + x_3 + x_4 + x_5 + x_6",
        "Subject To",
    ]
    assert " demand_1: x_1 + x_6 >= 4" in lines
    assert lines[-3:] == ["Generals", " x_1 x_2 x_3 x_4 x_5 x_6", "End"]
    assert "Bounds" not in lines


def test_lp_bounds_binaries_and_signs():
    assert render_lp(small_model()).splitlines() == [
        "\\ Model demo",
        "\\ Problem type: shift-scheduling",
        "Maximize",
        " obj: 2 x_1 - 1.5 x_2 - z_1",
        "Subject To",
        " link: x_1 - 5 z_1 <= 0",
        " pick: x_1 + 2 x_2 >= 3",
        "Bounds",
        " x_1 <= 5",
        "Generals",
        " x_1 x_2",
        "Binaries",
        " z_1",
        "End",
    ]


def test_long_lp_rows_are_wrapped():
    """Test that long rows are continued on indented lines."""
    model = ModelIR("wide", "days-off-scheduling")
    model.add_set("S", list(range(1, 41)))
    model.add_family(VariableFamily("x", ("S",), "nonneg-integer"))
    names = [model.add_variable("x", (s,)) for s in range(1, 41)]
    model.add_constraint("cover", {name: 8.0 for name in names}, ">=", 136)
    model.set_objective("minimize", {name: 600.0 for name in names})

    lines = render_lp(model).splitlines()
    assert all(len(line) <= LP_LINE_WIDTH for line in lines)
    start = lines.index("Subject To") + 1
    assert lines[start].startswith(" cover: 8 x_1 + 8 x_2")
    assert lines[start + 1].startswith("   + 8 x_")
    assert lines[lines.index("Generals") - 1].endswith(">= 136")

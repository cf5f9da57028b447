"""Rule matching and plan compilation, pinned against the committed golden
decomposition of the checkout contract."""

import pytest
from hypothesis import given, settings

from conftest import GOLDEN, build_text
from test_parser import _exprs

from reqexec.decomposer import (
    ForEach, SetAttr, match_rule, render_plan, render_trace, split_conjuncts,
)
from reqexec.fixtures import build_fixture
from reqexec.model import VarRef
from reqexec.pipeline import BuildError


def _post_conjunct(text_fragment, model_text):
    """Compile a one-off model and return the compiled op."""
    return build_text(model_text).operation("U", "op")


class TestMatchRule:
    def _resolved_conjuncts(self, compiled, uc, op, section):
        o = compiled.operation(uc, op)
        return [t for t in o.rule_trace if t.section == section]

    def test_spec_examples(self, mini_cocome, atm):
        enter = mini_cocome.operation("ProcessSale", "enterItem")
        post = [t.rule for t in enter.rule_trace if t.section == "postcondition"]
        assert post[-2] == 17  # allInstances()->includes(sli)
        pre = [t.rule for t in enter.rule_trace if t.section == "precondition"]
        assert pre[0] == 8  # oclIsUndefined() = false
        top10 = mini_cocome.operation("Reporting", "listTop10OutOfStock")
        assert [t.rule for t in top10.rule_trace] == [26]
        audit = mini_cocome.operation("Reporting", "auditStockLevels")
        assert [t.rule for t in audit.rule_trace if t.section == "postcondition"] == [None, 25]

    def test_section_ranges(self):
        # IsUnique-shaped conjunct is a precondition rule, never a post rule
        from reqexec.model import IsUnique, AllInstances, Includes
        isu = IsUnique("C", "o", "A")
        assert match_rule(isu, "pre") == 15
        assert match_rule(isu, "post") is None
        inc = Includes(AllInstances("C"), VarRef("x"))
        assert match_rule(inc, "pre") == 13
        assert match_rule(inc, "post") == 17
        assert match_rule(inc, "definition") is None


@settings(max_examples=150, deadline=None)
@given(_exprs())
def test_match_rule_section_discipline(expr):
    d = match_rule(expr, "definition")
    p = match_rule(expr, "pre")
    q = match_rule(expr, "post", {"a", "b", "item", "sli", "x1", "y_2"})
    assert d is None or 1 <= d <= 7
    assert p is None or 8 <= p <= 15
    assert q is None or 16 <= q <= 26


class TestEnterItemGolden:
    def test_plan_and_trace_match_committed_golden(self, mini_cocome):
        op = mini_cocome.operation("ProcessSale", "enterItem")
        got = render_plan(op) + render_trace(op)
        assert got == (GOLDEN / "enter_item_plan.txt").read_text(encoding="utf-8")

    def test_instruction_sequence(self, mini_cocome):
        op = mini_cocome.operation("ProcessSale", "enterItem")
        kinds = [type(i).__name__ for i in op.post_plan]
        assert kinds == ["Create", "BindSession", "LinkOne", "LinkMany", "LinkOne",
                         "SetAttr", "SetAttr", "SetAttr", "Add", "Return"]
        post_rules = [(t.rule, t.session_target) for t in op.rule_trace
                      if t.section == "postcondition"]
        assert post_rules == [(16, False), (21, True), (21, False), (19, False),
                              (21, False), (23, False), (23, False), (23, False),
                              (17, False), (25, False)]

    def test_compilation_deterministic(self):
        a = build_fixture("mini_cocome").operation("ProcessSale", "enterItem")
        b = build_fixture("mini_cocome").operation("ProcessSale", "enterItem")
        assert a.post_plan == b.post_plan
        assert a.rule_trace == b.rule_trace


class TestRuleLowering:
    def test_unlink_rules(self, libms):
        ret = libms.operation("Borrowing", "returnCopy")
        kinds = [type(i).__name__ for i in ret.post_plan]
        assert "UnlinkOne" in kinds and "UnlinkMany" in kinds
        rules = [t.rule for t in ret.rule_trace if t.section == "postcondition"]
        assert 22 in rules and 20 in rules

    def test_for_each_from_forall(self, atm):
        new_day = atm.operation("Maintenance", "startNewDay")
        (loop, _ret) = new_day.post_plan
        assert isinstance(loop, ForEach)
        assert isinstance(loop.body[0], SetAttr)
        assert [t.rule for t in new_day.rule_trace] == [24, 25]

    def test_release_from_excludes(self, atm):
        close = atm.operation("OpenAccount", "closeAccount")
        rules = [t.rule for t in close.rule_trace if t.section == "postcondition"]
        assert rules == [18, 25]

    def test_definition_rules(self, atm):
        count = atm.operation("QueryAccount", "countTransactions")
        rules = [t.rule for t in count.rule_trace if t.section == "definition"]
        assert rules == [3, 5]

    def test_linked_any_definition(self):
        compiled = build_text('''
actor A
class Box { Size: Integer; }
class Pearl { Grade: Integer; }
assoc Box.Contains -> Pearl [many]
usecase U actor A { pick; }
contract U::pick(boxSize: Integer) : Pearl {
  definition:
    b:Box = Box.allInstances()->any(x:Box | x.Size = boxSize)
    best:Pearl = b.Contains->any(p:Pearl | p.Grade > 5)
  precondition:
    b.oclIsUndefined() = false
  postcondition:
    result = best
}''')
        op = compiled.operation("U", "pick")
        assert [t.rule for t in op.rule_trace if t.section == "definition"] == [3, 7]


class TestHooks:
    def test_service_hook_names(self, mini_cocome, loanps):
        ops = mini_cocome.operations
        assert ops[("Reporting", "listTop10OutOfStock")].hooks[0].name == "Reports_top10OutOfStock"
        assert ops[("Reporting", "listLowStockAscending")].hooks[0].name == "Sorting_ascendingByStock"
        notify = loanps.operation("NotifyApplicant", "notifyApproval")
        assert notify.hooks[0].name == "Messaging_emailApproval"
        assert notify.hooks[0].kind == "service"

    def test_unmatched_hook_name_carries_position(self, mini_cocome):
        audit = mini_cocome.operation("Reporting", "auditStockLevels")
        assert audit.hooks[0].name == "hook_Reporting_auditStockLevels_1"
        assert audit.hooks[0].kind == "unmatched"

    def test_hooks_equal_unmatched_plus_service_calls(self, mini_cocome):
        for op in mini_cocome.in_order():
            unmatched = sum(1 for t in op.rule_trace
                            if t.section == "postcondition" and t.rule is None)
            service = sum(1 for t in op.rule_trace if t.rule == 26)
            assert len(op.hooks) == unmatched + service

    def test_compilation_total_over_fixtures(self, mini_cocome, atm, libms, loanps):
        for compiled in (mini_cocome, atm, libms, loanps):
            for op in compiled.in_order():
                post = [t for t in op.rule_trace if t.section == "postcondition"]
                assert len(post) == len(split_conjuncts(op.postcondition)) \
                    if op.postcondition is not None else not post


class TestCompileErrors:
    def test_forward_reference_to_let(self):
        with pytest.raises(BuildError) as exc:
            build_text('''
actor A
class C { X: Integer; }
usecase U actor A { op; }
contract U::op() : Boolean {
  postcondition:
    let c:C in
    C.allInstances()->includes(c) and
    c.oclIsNew() and
    result = true
}''')
        assert "forward reference" in str(exc.value)

    def test_literal_equals_literal_is_ambiguous(self):
        with pytest.raises(BuildError) as exc:
            build_text('''
actor A
class C { X: Integer; }
usecase U actor A { op; }
contract U::op() : Boolean {
  postcondition:
    1 = 2 and result = true
}''')
        assert "ambiguous" in str(exc.value)

    def test_let_in_precondition_rejected(self):
        with pytest.raises(BuildError):
            build_text('''
actor A
class C { X: Integer; }
usecase U actor A { op; }
contract U::op() : Boolean {
  precondition:
    let c:C in c.oclIsUndefined() = false
  postcondition:
    result = true
}''')


class TestExecutability:
    def test_atm_fully_executable(self, atm):
        from reqexec.analyzer import executability
        ex = executability(atm)
        assert (ex.executable, ex.total) == (15, 15)
        assert ex.success_rate == 100.0

    def test_empty_model_rate_is_100_by_convention(self):
        from reqexec.analyzer import executability
        compiled = build_text("")
        ex = executability(compiled)
        assert ex.total == 0 and ex.success_rate == 100.0

    def test_partial_operations_carry_hook_names(self, mini_cocome):
        from reqexec.analyzer import executability
        ex = executability(mini_cocome)
        partial = {s.operation: s.hooks for s in ex.operations
                   if s.status == "partially_executable"}
        assert set(partial) == {"listTop10OutOfStock", "listLowStockAscending",
                                "notifyLowStock", "auditStockLevels"}

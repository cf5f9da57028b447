"""Shared fixtures and the randomized-invocation driver.

The driver walks every use case in system-sequence order and asks a
per-operation generator for plausible arguments, so session bindings flow the
way an actor would produce them. Generators may return None to skip a round
(no suitable state yet) and may invoke setup operations through the driver;
every Ok outcome is counted and checked against the postcondition oracle.
"""

from __future__ import annotations

import random
from pathlib import Path

import pytest

from reqexec.decomposer import CompiledModel
from reqexec.executor import Executor, Ok
from reqexec.fixtures import build_fixture
from reqexec.model import BoolV, IntV, RealV, StrV, UNDEFINED, RefV
from reqexec.parser import SourceFile, parse_model
from reqexec.pipeline import build_from_sources

REPO = Path(__file__).resolve().parents[1]
GOLDEN = Path(__file__).resolve().parent / "golden"


def build_text(text: str, include_crud: bool = True) -> CompiledModel:
    return build_from_sources([SourceFile("<test>", text)], include_crud)


def parse_text(text: str):
    return parse_model([SourceFile("<test>", text)])


@pytest.fixture(scope="session")
def atm() -> CompiledModel:
    return build_fixture("atm")


@pytest.fixture(scope="session")
def mini_cocome() -> CompiledModel:
    return build_fixture("mini_cocome")


@pytest.fixture(scope="session")
def libms() -> CompiledModel:
    return build_fixture("libms_subset")


@pytest.fixture(scope="session")
def loanps() -> CompiledModel:
    return build_fixture("loanps_subset")


# ---------------------------------------------------------------------------
# Randomized valid-invocation driver
# ---------------------------------------------------------------------------

class Driver:
    def __init__(self, name: str, seed: int = 0, check_oracle: bool = True,
                 reset_every: int = 8):
        self.fixture_name = name
        self.compiled = build_fixture(name)
        self.rng = random.Random(seed)
        self.check_oracle = check_oracle
        self.reset_every = reset_every
        self.generators = GENERATORS[FIXTURE_FAMILY[name]]
        self.ok_counts: dict[tuple[str, str], int] = {}
        self.oracle_failures: list[str] = []
        self._fresh = 0
        self._reset()
        for op in self.compiled.in_order():
            if op.executable:
                self.ok_counts[(op.use_case, op.name)] = 0

    def _reset(self) -> None:
        self.executor = Executor(self.compiled)
        self.sessions = {uc.name: self.executor.create_session(uc.name)
                         for uc in self.compiled.resolved.use_cases}

    def fresh(self, prefix: str) -> str:
        self._fresh += 1
        return f"{prefix}{self._fresh}"

    # -- store inspection helpers used by generators ------------------------
    def instances(self, class_name: str) -> list[int]:
        return self.executor.store.live_instance_ids(class_name)

    def attr(self, oid: int, name: str):
        return self.executor.store.records[oid].attributes[name]

    def pick(self, candidates):
        candidates = list(candidates)
        return self.rng.choice(candidates) if candidates else None

    def session_ref(self, use_case: str, binding: str):
        v = self.sessions[use_case].bindings.get(binding, UNDEFINED)
        return v if isinstance(v, RefV) else None

    # -- driving -------------------------------------------------------------
    def invoke(self, use_case: str, op_name: str, args) -> object:
        outcome = self.executor.invoke(self.sessions[use_case], op_name, list(args))
        if isinstance(outcome, Ok):
            key = (use_case, op_name)
            if key in self.ok_counts:
                if self.check_oracle and not self.executor.verify_postcondition():
                    self.oracle_failures.append(f"{use_case}::{op_name}")
                self.ok_counts[key] += 1
        return outcome

    def round(self) -> None:
        for uc in self.compiled.resolved.use_cases:
            for op_name in uc.operations:
                op = self.compiled.operations[(uc.name, op_name)]
                if not op.executable:
                    continue
                gen = self.generators.get((uc.name, op_name))
                if gen is None:
                    continue
                args = gen(self)
                if args is None:
                    continue
                self.invoke(uc.name, op_name, args)

    def run(self, per_contract: int = 200, max_rounds: int = 4000) -> dict:
        rounds = 0
        while rounds < max_rounds and (
                not self.ok_counts or min(self.ok_counts.values()) < per_contract):
            if rounds and rounds % self.reset_every == 0:
                self._reset()
            self.round()
            rounds += 1
        return dict(self.ok_counts)


def _real(x: float) -> RealV:
    return RealV(round(x, 2))


# -- ATM -----------------------------------------------------------------------

def _atm_account(d: Driver):
    return d.pick(d.instances("Account"))


def _atm_active_card(d: Driver, active: bool = True):
    return d.pick(i for i in d.instances("Card")
                  if d.attr(i, "IsActive") == BoolV(active))


def _gen_open_account(d: Driver):
    deposit = 0.0 if d.rng.random() < 0.4 else round(d.rng.uniform(0, 3000), 2)
    return [StrV(d.fresh("A")), RealV(deposit)]


def _gen_issue_card(d: Driver):
    acc = _atm_account(d)
    if acc is None:
        return None
    return [d.attr(acc, "AccountId"), StrV(d.fresh("C")), IntV(d.rng.randint(0, 9999))]


def _gen_close_account(d: Driver):
    zero = d.pick(i for i in d.instances("Account")
                  if d.attr(i, "Balance") == RealV(0.0))
    if zero is None:
        aid = StrV(d.fresh("A"))
        d.invoke("OpenAccount", "openAccount", [aid, RealV(0.0)])
        return [aid]
    return [d.attr(zero, "AccountId")]


def _gen_insert_card(d: Driver):
    card = _atm_active_card(d)
    if card is None:
        return None
    return [d.attr(card, "CardNumber")]


def _gen_enter_pin(d: Driver):
    current = d.session_ref("CardSession", "currentCard")
    if current is None or current.object_id not in d.executor.store.records:
        return None
    pin = d.attr(current.object_id, "Pin")
    if d.rng.random() < 0.1:
        return [IntV((pin.value + 1) % 10000)]
    return [pin]


def _gen_withdraw(d: Driver):
    accounts = []
    for i in d.instances("Account"):
        headroom = min(d.attr(i, "Balance").value,
                       d.attr(i, "DailyLimit").value - d.attr(i, "WithdrewToday").value)
        if headroom > 1.0:
            accounts.append((i, headroom))
    if not accounts:
        return None
    oid, headroom = d.rng.choice(accounts)
    return [d.attr(oid, "AccountId"), _real(d.rng.uniform(0.5, headroom * 0.9))]


def _gen_deposit(d: Driver):
    acc = _atm_account(d)
    if acc is None:
        return None
    return [d.attr(acc, "AccountId"), _real(d.rng.uniform(0.01, 500))]


def _gen_query(d: Driver):
    acc = _atm_account(d)
    return None if acc is None else [d.attr(acc, "AccountId")]


def _gen_freeze(d: Driver):
    card = _atm_active_card(d, True)
    return None if card is None else [d.attr(card, "CardNumber")]


def _gen_unfreeze(d: Driver):
    card = _atm_active_card(d, False)
    return None if card is None else [d.attr(card, "CardNumber")]


def _gen_set_limit(d: Driver):
    acc = _atm_account(d)
    if acc is None:
        return None
    floor = max(d.attr(acc, "WithdrewToday").value, 100.0)
    return [d.attr(acc, "AccountId"), _real(d.rng.uniform(floor, floor + 4000))]


ATM_GENERATORS = {
    ("OpenAccount", "openAccount"): _gen_open_account,
    ("OpenAccount", "issueCard"): _gen_issue_card,
    ("OpenAccount", "closeAccount"): _gen_close_account,
    ("CardSession", "insertCard"): _gen_insert_card,
    ("CardSession", "enterPin"): _gen_enter_pin,
    ("CardSession", "ejectCard"): lambda d: [],
    ("Withdraw", "withdraw"): _gen_withdraw,
    ("Deposit", "deposit"): _gen_deposit,
    ("QueryAccount", "queryBalance"): _gen_query,
    ("QueryAccount", "queryWithdrewToday"): _gen_query,
    ("QueryAccount", "countTransactions"): _gen_query,
    ("Maintenance", "startNewDay"): lambda d: [],
    ("Maintenance", "freezeCard"): _gen_freeze,
    ("Maintenance", "unfreezeCard"): _gen_unfreeze,
    ("Maintenance", "setDailyLimit"): _gen_set_limit,
}


# -- mini CoCoME ------------------------------------------------------------------

def _stocked_item(d: Driver):
    return d.pick(i for i in d.instances("Item")
                  if d.attr(i, "StockNumber").value > 0.5)


def _gen_add_item(d: Driver):
    return [StrV(d.fresh("B")), _real(d.rng.uniform(0.5, 20.0)),
            _real(d.rng.uniform(1.0, 50.0))]


def _gen_restock(d: Driver):
    item = d.pick(d.instances("Item"))
    return None if item is None else [d.attr(item, "Barcode"),
                                      _real(d.rng.uniform(1, 10))]


def _gen_enter_item(d: Driver):
    item = _stocked_item(d)
    if item is None:
        return None
    stock = d.attr(item, "StockNumber").value
    return [d.attr(item, "Barcode"), _real(d.rng.uniform(0.5, min(3.0, stock)))]


def _gen_cash_payment(d: Driver):
    sale = d.session_ref("ProcessSale", "currentSale")
    if sale is None or sale.object_id not in d.executor.store.records:
        return None
    amount = d.attr(sale.object_id, "Amount")
    if amount is UNDEFINED:
        return None
    return [_real(amount.value + d.rng.uniform(0, 20))]


def _gen_create_store(d: Driver):
    return [IntV(d.rng.randint(1, 10 ** 6)), StrV(d.fresh("Store")), StrV("Taipa")]


def _gen_read_store(d: Driver):
    s = d.pick(d.instances("Store"))
    return None if s is None else [d.attr(s, "StoreId")]


def _gen_update_store(d: Driver):
    s = d.pick(d.instances("Store"))
    if s is None:
        return None
    return [d.attr(s, "StoreId"), StrV(d.fresh("Name")), StrV(d.fresh("Addr"))]


COCOME_GENERATORS = {
    ("ProcessSale", "makeNewSale"): lambda d: [],
    ("ProcessSale", "enterItem"): _gen_enter_item,
    ("ProcessSale", "endSale"): lambda d: [_real(d.rng.uniform(0, 5))],
    ("ProcessSale", "makeCashPayment"): _gen_cash_payment,
    ("ManageItems", "addItem"): _gen_add_item,
    ("ManageItems", "restockItem"): _gen_restock,
    ("ManageStore", "createStore"): _gen_create_store,
    ("ManageStore", "readStore"): _gen_read_store,
    ("ManageStore", "updateStore"): _gen_update_store,
    ("ManageStore", "deleteStore"): _gen_read_store,
}


# -- LibMS -------------------------------------------------------------------------

def _gen_register_copy(d: Driver):
    book = d.pick(d.instances("Book"))
    return None if book is None else [StrV(d.fresh("C")), d.attr(book, "Isbn")]


def _gen_borrow(d: Driver):
    student = d.pick(s for s in d.instances("Student")
                     if d.attr(s, "HeldCount").value < 5)
    copy = d.pick(c for c in d.instances("BookCopy")
                  if d.attr(c, "IsBorrowed") == BoolV(False))
    if student is None or copy is None:
        return None
    return [d.attr(student, "StudentId"), d.attr(copy, "CopyId")]


def _gen_return(d: Driver):
    copy = d.pick(c for c in d.instances("BookCopy")
                  if d.attr(c, "IsBorrowed") == BoolV(True))
    return None if copy is None else [d.attr(copy, "CopyId")]


LIBMS_GENERATORS = {
    ("RegisterAssets", "registerStudent"): lambda d: [StrV(d.fresh("S")), StrV(d.fresh("Name"))],
    ("RegisterAssets", "registerBook"): lambda d: [StrV(d.fresh("I")), StrV(d.fresh("Title"))],
    ("RegisterAssets", "registerCopy"): _gen_register_copy,
    ("Borrowing", "borrowCopy"): _gen_borrow,
    ("Borrowing", "returnCopy"): _gen_return,
    ("Circulation", "passOneDay"): lambda d: [],
}


# -- LoanPS ------------------------------------------------------------------------

def _pending_request(d: Driver, min_score=None):
    out = []
    for r in d.instances("LoanRequest"):
        if d.attr(r, "Status") != StrV("pending"):
            continue
        if min_score is not None:
            holder = d.executor.store.records[r].links["BelongedApplicant"]
            if holder is None or d.attr(holder, "CreditScore").value < min_score:
                continue
        out.append(r)
    return d.pick(out)


def _setup_pending(d: Driver, score: int) -> StrV:
    aid = StrV(d.fresh("P"))
    rid = StrV(d.fresh("R"))
    d.invoke("SubmitRequest", "registerApplicant", [aid, StrV("N"), IntV(score)])
    d.invoke("SubmitRequest", "submitRequest", [aid, rid, _real(d.rng.uniform(100, 9000))])
    return rid


def _gen_register_applicant(d: Driver):
    return [StrV(d.fresh("P")), StrV(d.fresh("N")), IntV(d.rng.randint(300, 850))]


def _gen_submit_request(d: Driver):
    a = d.pick(d.instances("Applicant"))
    if a is None:
        return None
    return [d.attr(a, "ApplicantId"), StrV(d.fresh("R")), _real(d.rng.uniform(100, 9000))]


def _gen_approve(d: Driver):
    r = _pending_request(d, min_score=600)
    if r is None:
        return [_setup_pending(d, d.rng.randint(600, 850))]
    return [d.attr(r, "RequestId")]


def _gen_reject(d: Driver):
    r = _pending_request(d)
    if r is None:
        return [_setup_pending(d, d.rng.randint(300, 850))]
    return [d.attr(r, "RequestId")]


def _gen_book_loan(d: Driver):
    approved = d.pick(r for r in d.instances("LoanRequest")
                      if d.attr(r, "Status") == StrV("approved"))
    if approved is None:
        rid = _setup_pending(d, 700)
        d.invoke("EvaluateRequest", "approveRequest", [rid])
        return [rid, StrV(d.fresh("L"))]
    return [d.attr(approved, "RequestId"), StrV(d.fresh("L"))]


def _gen_repay(d: Driver):
    loan = d.pick(l for l in d.instances("Loan")
                  if d.attr(l, "Outstanding").value > 1.0)
    if loan is None:
        return None
    outstanding = d.attr(loan, "Outstanding").value
    return [d.attr(loan, "LoanId"), _real(d.rng.uniform(0.5, outstanding))]


LOANPS_GENERATORS = {
    ("SubmitRequest", "registerApplicant"): _gen_register_applicant,
    ("SubmitRequest", "submitRequest"): _gen_submit_request,
    ("EvaluateRequest", "approveRequest"): _gen_approve,
    ("EvaluateRequest", "rejectRequest"): _gen_reject,
    ("BookLoan", "bookLoan"): _gen_book_loan,
    ("BookLoan", "makeRepayment"): _gen_repay,
}


GENERATORS = {
    "atm": ATM_GENERATORS,
    "mini_cocome": COCOME_GENERATORS,
    "libms_subset": LIBMS_GENERATORS,
    "loanps_subset": LOANPS_GENERATORS,
}

FIXTURE_FAMILY = {
    "atm": "atm",
    "withdraw_wrong_guard": "atm",
    "mini_cocome": "mini_cocome",
    "cash_payment_missing_guard": "mini_cocome",
    "end_sale_sign_typo": "mini_cocome",
    "libms_subset": "libms_subset",
    "loanps_subset": "loanps_subset",
}

ALL_FIXTURES = tuple(FIXTURE_FAMILY)

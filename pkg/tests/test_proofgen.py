from __future__ import annotations

from dataclasses import replace
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, given, settings

from conftest import corpus_models, fixture_text
from reparam_ppl.errors import UnwhitelistedPrimitive
from reparam_ppl.expr import Apply, Const, Gen, Input, Proj, Var
from reparam_ppl.frontend import load_program
from reparam_ppl.ir import PureFn, UniformLeaf
from reparam_ppl.proofgen import (
    WHITELIST, CompCert, ConstCert, PairCert, PrimCert, ProjCert, RefCert, cert_leaves,
    check_cert, derive_cert, emit_cert_lemma,
)
from reparam_ppl.reparam import Slice, slices, translate_program
from strategies import model_sources


def test_single_generator_cert():
    s = Slice("theta", Gen("uniform", (Const(Fraction(0)), Const(Fraction(1))), Proj(Input(), 0)))
    assert derive_cert(s) == CompCert(PrimCert("gen_uniform", (0, 1)), ProjCert("fst"))


def test_majority_cert_pairs_the_slices(selection):
    program, table = selection
    fn = table["majority"].fn
    cert = derive_cert(fn, table)
    theta, x = slices(program["majority"], table)
    assert cert == PairCert(derive_cert(theta), derive_cert(x))
    assert check_cert(cert, fn, table)


def test_floor_is_rejected():
    fn = PureFn("f_fun", "f", UniformLeaf(), (("y", Apply("floor", (Input(),))),), Var("y"))
    with pytest.raises(UnwhitelistedPrimitive) as exc:
        derive_cert(fn)
    assert "floor" in str(exc.value)


def test_majority_cert_does_not_fit_demographic_parity(selection):
    _, table = selection
    res = check_cert(table["majority"].cert, table["demographic_parity"].fn, table)
    assert not res
    assert res.path.startswith("root") and res.reason


def test_renamed_leaf_is_rejected(selection):
    _, table = selection
    fn = table["majority"].fn
    bad = replace(table["majority"].cert,
                  right=replace(table["majority"].cert.right, outer=PrimCert("gen_normal")))
    res = check_cert(bad, fn, table)
    assert not res and res.path == "root.right"


def test_unknown_callee_reference_is_rejected(selection):
    program, _ = selection
    table = translate_program(program, hoist=False)
    entry = table["demographic_parity"]
    assert check_cert(entry.cert, entry.fn, table)
    assert not check_cert(entry.cert, entry.fn, set())
    with pytest.raises(UnwhitelistedPrimitive):
        derive_cert(entry.fn, set())


def test_derive_is_deterministic(selection):
    _, table = selection
    fn = table["demographic_parity"].fn
    assert derive_cert(fn, table) == derive_cert(fn, table)


def test_whitelist_covers_emitted_leaves(compiled):
    for _, table, name in corpus_models(compiled):
        for leaf in cert_leaves(table[name].cert):
            if isinstance(leaf, PrimCert):
                assert leaf.name in WHITELIST


# -- soundness over the corpus ---------------------------------------------------------

def test_certs_check_on_every_corpus_fn_and_slice(compiled):
    checked = 0
    for program, table, name in corpus_models(compiled):
        fn = table[name].fn
        assert check_cert(derive_cert(fn, table), fn, table), name
        for s in slices(program[name], table):
            assert check_cert(derive_cert(s, table), s, table), (name, s.var)
            checked += 1
    assert checked >= 20


@settings(max_examples=300, suppress_health_check=[HealthCheck.too_slow])
@given(src=model_sources())
def test_translator_output_is_always_certifiable(src):
    program = load_program(src)
    for hoist in (True, False):
        table = translate_program(program, hoist=hoist)
        for entry in table:
            assert check_cert(entry.cert, entry.fn, table)


# -- lemma text ---------------------------------------------------------------------------

def test_majority_lemma_golden(selection):
    _, table = selection
    text = emit_cert_lemma(table["majority"].cert, "majority_fun")
    assert text == fixture_text("majority_fun_measurable.lean")
    for name in ("measurable_gen_uniform", "measurable_gen_bernoulli", "measurable.comp",
                 "measurable.prod"):
        assert name in text


def test_const_lemma():
    text = emit_cert_lemma(ConstCert(Fraction(3)), "three_fun")
    assert text == ("lemma three_fun_measurable : measurable three_fun := by\n"
                    "  exact measurable_const\n")


def test_reused_callee_lemma_is_referenced(selection):
    program, _ = selection
    table = translate_program(program, hoist=False)
    text = emit_cert_lemma(table["demographic_parity"].cert, "demographic_parity_fun")
    assert "exact majority_fun_measurable" in text
    assert "measurable_gen_bernoulli" in text  # its own draws
    assert text.count("measurable_gen_uniform 0 1") == 0  # majority's body is not re-derived


def test_ref_cert_lemma():
    text = emit_cert_lemma(CompCert(RefCert("g_fun"), ProjCert("snd")), "f_fun")
    assert "exact g_fun_measurable" in text and "exact measurable_snd" in text

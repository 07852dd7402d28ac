from spectre_lab import corpus
from spectre_lab.hardening import compile_component
from spectre_lab.lang import plug
from spectre_lab.syntax import parse_program


def whole(text):
    return parse_program(text, allow_reserved=True)


def corpus_whole(cid, aid, pass_="id"):
    return plug(corpus.attacker(aid), compile_component(pass_, corpus.component(cid)))


def show(trace):
    return [str(a) for a in trace]

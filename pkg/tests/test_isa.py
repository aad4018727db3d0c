import pytest
from hypothesis import given, strategies as st

from uintrsim.isa import (assemble, decode, encode, encode_ins, disasm, AsmError, EncodeError, ProgramImage,
                          R_OPS, I_OPS, BRANCHES, LOADS, STORES, CSRS)

# Encodings produced by `clang --target=riscv32 -march=rv32im` for the listing below,
# frozen here so the test does not need a toolchain.
CLANG_SRC = """
start:
add x1, x2, x3
sub a0, a1, a2
addi sp, sp, -16
addi t0, zero, 2047
slli t1, t2, 31
srai s0, s1, 7
srli a5, a4, 1
lui a0, 0xfffff
auipc t0, 0x12345
lw ra, -4(sp)
lbu t3, 2047(t4)
sh a1, -2048(a2)
sw s11, 12(gp)
mul a0, a1, a2
mulhu t0, t1, t2
div s2, s3, s4
remu t5, t6, a7
back:
beq x0, x0, back
bne a0, a1, start
bltu t0, t1, fwd
jal ra, fwd
jalr zero, 0(ra)
csrrw t0, mstatus, t1
csrrs a0, mepc, zero
csrrci zero, mstatus, 8
csrrwi x0, 0x7c0, 31
ecall
ebreak
mret
wfi
fence
fwd:
xori a0, a0, -1
sltiu a1, a2, 1
and a3, a4, a5
"""
CLANG_WORDS = [
    0x003100b3, 0x40c58533, 0xff010113, 0x7ff00293, 0x01f39313, 0x4074d413, 0x00175793,
    0xfffff537, 0x12345297, 0xffc12083, 0x7ffece03, 0x80b61023, 0x01b1a623, 0x02c58533,
    0x027332b3, 0x0349c933, 0x031fff33, 0x00000063, 0xfab51ce3, 0x0262e863, 0x02c000ef,
    0x00008067, 0x300312f3, 0x34102573, 0x30047073, 0x7c0fd073, 0x00000073, 0x00100073,
    0x30200073, 0x10500073, 0x0ff0000f, 0xfff54513, 0x00163593, 0x00f776b3,
]


def test_matches_reference_assembler():
    assert assemble(CLANG_SRC).words == CLANG_WORDS


def test_decode_reference_words_round_trip():
    for w in CLANG_WORDS:
        ins = decode(w)
        assert not ins.illegal, hex(w)
        if ins.name != 'fence':
            assert encode_ins(ins) == w


def test_labels_and_symbols():
    img = assemble("""
    top:
      addi a0, a0, 1
      j top
    end:
    """, origin=0x100)
    assert img.origin == 0x100 and img.symbols['top'] == 0x100
    assert decode(img.words[1]).imm == -4


def test_pseudos_expand():
    img = assemble("li a0, 0x12345678\nmv a1, a0\nnop\nret\nuret")
    names = [decode(w).name for w in img.words]
    assert names == ['lui', 'addi', 'addi', 'addi', 'jalr', 'uret']


def test_li_small_is_one_instruction():
    assert len(assemble('li t0, -5').words) == 1


def test_bgtz_blez_swap_operands():
    a = decode(assemble('x: bgtz t0, x').words[0])
    b = decode(assemble('x: blez t0, x').words[0])
    assert (a.name, a.rs1, a.rs2) == ('blt', 0, 5)
    assert (b.name, b.rs1, b.rs2) == ('bge', 0, 5)


@pytest.mark.parametrize('src,kind', [
    ('frob a0, a1', 'unknown-mnemonic'),
    ('addi a0, a1, 5000', 'immediate-range'),
    ('add a0, a1', 'operand-count'),
    ('add a0, a1, q9', 'bad-register'),
    ('j nowhere', 'undefined-symbol'),
    ('x:\nx:\nnop', 'duplicate-label'),
    ('', 'empty'),
])
def test_asm_errors(src, kind):
    with pytest.raises(AsmError) as e:
        assemble(src)
    assert e.value.kind == kind


def test_encode_rejects_odd_branch():
    with pytest.raises(EncodeError):
        encode('beq', rs1=1, rs2=2, imm=3)


def test_unknown_word_is_illegal():
    assert decode(0xFFFFFFFF).illegal
    assert decode(0).illegal


def test_program_image_bytes_round_trip():
    img = assemble('addi a0, a0, 1\nuret', origin=0x40)
    back = ProgramImage.from_bytes(0x40, img.to_bytes())
    assert back.words == img.words
    with pytest.raises(ValueError):
        ProgramImage(2, [1])


def test_extension_csrs_named():
    assert assemble('csrr a0, muicause').words == [encode('csrrs', 10, 0, 0, 0, CSRS['muicause'])]


regs = st.integers(0, 31)
imm12 = st.integers(-2048, 2047)


@given(st.sampled_from(sorted(R_OPS)), regs, regs, regs)
def test_r_type_round_trip(name, rd, rs1, rs2):
    ins = decode(encode(name, rd, rs1, rs2))
    assert (ins.name, ins.rd, ins.rs1, ins.rs2) == (name, rd, rs1, rs2)


@given(st.sampled_from(sorted(I_OPS) + sorted(LOADS)), regs, regs, imm12)
def test_i_type_round_trip(name, rd, rs1, imm):
    ins = decode(encode(name, rd, rs1, 0, imm))
    assert (ins.name, ins.rd, ins.rs1, ins.imm) == (name, rd, rs1, imm)


@given(st.sampled_from(sorted(STORES)), regs, regs, imm12)
def test_store_round_trip(name, rs1, rs2, imm):
    ins = decode(encode(name, 0, rs1, rs2, imm))
    assert (ins.name, ins.rs1, ins.rs2, ins.imm) == (name, rs1, rs2, imm)


@given(st.sampled_from(sorted(BRANCHES)), regs, regs, st.integers(-2048, 2047).map(lambda x: 2 * x))
def test_branch_round_trip(name, rs1, rs2, imm):
    ins = decode(encode(name, 0, rs1, rs2, imm))
    assert (ins.name, ins.rs1, ins.rs2, ins.imm) == (name, rs1, rs2, imm)


@given(st.integers(0, 2**32 - 1))
def test_decode_total(word):
    ins = decode(word)
    disasm(ins)
    if not ins.illegal and ins.name != 'fence':
        assert encode_ins(ins) == word

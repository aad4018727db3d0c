"""RV32IM decoding, encoding and a small two-pass assembler."""
import re
from dataclasses import dataclass, field

ABI = ['zero', 'ra', 'sp', 'gp', 'tp', 't0', 't1', 't2', 's0', 's1',
       'a0', 'a1', 'a2', 'a3', 'a4', 'a5', 'a6', 'a7',
       's2', 's3', 's4', 's5', 's6', 's7', 's8', 's9', 's10', 's11',
       't3', 't4', 't5', 't6']
REGS = {n: i for i, n in enumerate(ABI)}
REGS.update({'x%d' % i: i for i in range(32)})
REGS['fp'] = 8

# Machine-level CSR numbers. mu* and the CAM window live in custom space.
CSRS = {
    'mstatus': 0x300, 'mie': 0x304, 'mtvec': 0x305, 'mscratch': 0x340,
    'mepc': 0x341, 'mcause': 0x342, 'mtval': 0x343, 'mip': 0x344,
    'mcycle': 0xB00, 'mcycleh': 0xB80, 'cycle': 0xC00, 'cycleh': 0xC80,
    'muictl': 0x7C0, 'muistk': 0x7C1, 'muiepc': 0x7C2, 'muicause': 0x7C3,
    'mtime': 0x7C8, 'mtimeh': 0x7C9, 'mtimecmp': 0x7CA, 'mtimecmph': 0x7CB,
}
CAM_MAX = 48
IIDNUM, IIDPMP, IIDTIM = 0xBC0, 0x7D0, 0x8C0
for _i in range(CAM_MAX):
    CSRS['iidnum%d' % _i] = IIDNUM + _i
    CSRS['iidpmp%d' % _i] = IIDPMP + _i
    CSRS['iidtim%d' % _i] = IIDTIM + _i

R_OPS = {  # name: (funct7, funct3)
    'add': (0, 0), 'sub': (0x20, 0), 'sll': (0, 1), 'slt': (0, 2), 'sltu': (0, 3),
    'xor': (0, 4), 'srl': (0, 5), 'sra': (0x20, 5), 'or': (0, 6), 'and': (0, 7),
    'mul': (1, 0), 'mulh': (1, 1), 'mulhsu': (1, 2), 'mulhu': (1, 3),
    'div': (1, 4), 'divu': (1, 5), 'rem': (1, 6), 'remu': (1, 7),
}
I_OPS = {'addi': 0, 'slti': 2, 'sltiu': 3, 'xori': 4, 'ori': 6, 'andi': 7}
SHIFT_OPS = {'slli': (0, 1), 'srli': (0, 5), 'srai': (0x20, 5)}
LOADS = {'lb': 0, 'lh': 1, 'lw': 2, 'lbu': 4, 'lhu': 5}
STORES = {'sb': 0, 'sh': 1, 'sw': 2}
BRANCHES = {'beq': 0, 'bne': 1, 'blt': 4, 'bge': 5, 'bltu': 6, 'bgeu': 7}
CSR_OPS = {'csrrw': 1, 'csrrs': 2, 'csrrc': 3, 'csrrwi': 5, 'csrrsi': 6, 'csrrci': 7}
SYSTEM = {'ecall': 0x00000073, 'ebreak': 0x00100073, 'uret': 0x00200073,
          'mret': 0x30200073, 'wfi': 0x10500073}

_R_BY_CODE = {v: k for k, v in R_OPS.items()}
_I_BY_CODE = {v: k for k, v in I_OPS.items()}
_SH_BY_CODE = {v: k for k, v in SHIFT_OPS.items()}
_L_BY_CODE = {v: k for k, v in LOADS.items()}
_S_BY_CODE = {v: k for k, v in STORES.items()}
_B_BY_CODE = {v: k for k, v in BRANCHES.items()}
_C_BY_CODE = {v: k for k, v in CSR_OPS.items()}
_SYS_BY_WORD = {v: k for k, v in SYSTEM.items()}


@dataclass(frozen=True)
class Instruction:
    name: str
    rd: int = 0
    rs1: int = 0
    rs2: int = 0
    imm: int = 0
    csr: int = 0
    word: int = 0

    @property
    def illegal(self):
        return self.name == 'illegal'

    def __str__(self):
        return disasm(self)


def IllegalInstruction(word):
    return Instruction('illegal', word=word)


def sext(v, bits):
    v &= (1 << bits) - 1
    return v - (1 << bits) if v >> (bits - 1) else v


def decode(word):
    """Decode one 32-bit word. Never raises; bad encodings give an 'illegal' instruction."""
    word &= 0xFFFFFFFF
    op = word & 0x7F
    rd = (word >> 7) & 31
    f3 = (word >> 12) & 7
    rs1 = (word >> 15) & 31
    rs2 = (word >> 20) & 31
    f7 = word >> 25
    I = lambda n, **kw: Instruction(n, word=word, **kw)
    if op == 0x37:
        return I('lui', rd=rd, imm=word & 0xFFFFF000)
    if op == 0x17:
        return I('auipc', rd=rd, imm=word & 0xFFFFF000)
    if op == 0x6F:
        imm = ((word >> 31) << 20) | (((word >> 12) & 0xFF) << 12) | (((word >> 20) & 1) << 11) | (((word >> 21) & 0x3FF) << 1)
        return I('jal', rd=rd, imm=sext(imm, 21))
    if op == 0x67 and f3 == 0:
        return I('jalr', rd=rd, rs1=rs1, imm=sext(word >> 20, 12))
    if op == 0x63 and f3 in _B_BY_CODE:
        imm = ((word >> 31) << 12) | (((word >> 7) & 1) << 11) | (((word >> 25) & 0x3F) << 5) | (((word >> 8) & 0xF) << 1)
        return I(_B_BY_CODE[f3], rs1=rs1, rs2=rs2, imm=sext(imm, 13))
    if op == 0x03 and f3 in _L_BY_CODE:
        return I(_L_BY_CODE[f3], rd=rd, rs1=rs1, imm=sext(word >> 20, 12))
    if op == 0x23 and f3 in _S_BY_CODE:
        imm = (f7 << 5) | rd
        return I(_S_BY_CODE[f3], rs1=rs1, rs2=rs2, imm=sext(imm, 12))
    if op == 0x13:
        if f3 in (1, 5):
            key = (f7, f3)
            if key not in _SH_BY_CODE:
                return IllegalInstruction(word)
            return I(_SH_BY_CODE[key], rd=rd, rs1=rs1, imm=rs2)
        return I(_I_BY_CODE[f3], rd=rd, rs1=rs1, imm=sext(word >> 20, 12))
    if op == 0x33:
        name = _R_BY_CODE.get((f7, f3))
        if name is None:
            return IllegalInstruction(word)
        return I(name, rd=rd, rs1=rs1, rs2=rs2)
    if op == 0x0F and f3 in (0, 1):
        return I('fence')
    if op == 0x73:
        if f3 == 0:
            name = _SYS_BY_WORD.get(word)
            return I(name) if name else IllegalInstruction(word)
        if f3 in _C_BY_CODE:
            return I(_C_BY_CODE[f3], rd=rd, rs1=rs1, csr=word >> 20)
    return IllegalInstruction(word)


# ---------------------------------------------------------------- encoding

class EncodeError(ValueError):
    pass


def _chk(v, lo, hi, what):
    if not lo <= v <= hi:
        raise EncodeError('%s %d out of range [%d, %d]' % (what, v, lo, hi))


def _i_type(imm, rs1, f3, rd, op):
    _chk(imm, -2048, 2047, 'immediate')
    return ((imm & 0xFFF) << 20) | (rs1 << 15) | (f3 << 12) | (rd << 7) | op


def encode(name, rd=0, rs1=0, rs2=0, imm=0, csr=0):
    """Encode a base instruction (no pseudo-ops) to a 32-bit word."""
    if name in R_OPS:
        f7, f3 = R_OPS[name]
        return (f7 << 25) | (rs2 << 20) | (rs1 << 15) | (f3 << 12) | (rd << 7) | 0x33
    if name in I_OPS:
        return _i_type(imm, rs1, I_OPS[name], rd, 0x13)
    if name in SHIFT_OPS:
        _chk(imm, 0, 31, 'shift amount')
        f7, f3 = SHIFT_OPS[name]
        return (f7 << 25) | (imm << 20) | (rs1 << 15) | (f3 << 12) | (rd << 7) | 0x13
    if name in LOADS:
        return _i_type(imm, rs1, LOADS[name], rd, 0x03)
    if name in STORES:
        _chk(imm, -2048, 2047, 'immediate')
        imm &= 0xFFF
        return ((imm >> 5) << 25) | (rs2 << 20) | (rs1 << 15) | (STORES[name] << 12) | ((imm & 31) << 7) | 0x23
    if name in BRANCHES:
        _chk(imm, -4096, 4094, 'branch offset')
        if imm & 1:
            raise EncodeError('branch offset %d is odd' % imm)
        i = imm & 0x1FFF
        return (((i >> 12) & 1) << 31) | (((i >> 5) & 0x3F) << 25) | (rs2 << 20) | (rs1 << 15) | \
            (BRANCHES[name] << 12) | (((i >> 1) & 0xF) << 8) | (((i >> 11) & 1) << 7) | 0x63
    if name == 'jal':
        _chk(imm, -(1 << 20), (1 << 20) - 2, 'jump offset')
        if imm & 1:
            raise EncodeError('jump offset %d is odd' % imm)
        i = imm & 0x1FFFFF
        return (((i >> 20) & 1) << 31) | (((i >> 1) & 0x3FF) << 21) | (((i >> 11) & 1) << 20) | \
            (((i >> 12) & 0xFF) << 12) | (rd << 7) | 0x6F
    if name == 'jalr':
        return _i_type(imm, rs1, 0, rd, 0x67)
    if name in ('lui', 'auipc'):
        # imm is the upper-20-bit field value
        _chk(imm, 0, 0xFFFFF, 'upper immediate')
        return (imm << 12) | (rd << 7) | (0x37 if name == 'lui' else 0x17)
    if name in CSR_OPS:
        _chk(csr, 0, 0xFFF, 'csr')
        src = rs1
        if name.endswith('i'):
            _chk(imm, 0, 31, 'csr immediate')
            src = imm
        return (csr << 20) | (src << 15) | (CSR_OPS[name] << 12) | (rd << 7) | 0x73
    if name == 'fence':
        return 0x0FF0000F
    if name in SYSTEM:
        return SYSTEM[name]
    raise EncodeError('cannot encode %r' % name)


def encode_ins(ins):
    """Inverse of decode for legal instructions."""
    n = ins.name
    if n in ('lui', 'auipc'):
        return encode(n, ins.rd, imm=(ins.imm >> 12) & 0xFFFFF)
    if n in CSR_OPS and n.endswith('i'):
        return encode(n, ins.rd, imm=ins.rs1, csr=ins.csr)
    return encode(n, ins.rd, ins.rs1, ins.rs2, ins.imm, ins.csr)


def disasm(ins):
    n = ins.name
    r = lambda i: ABI[i]
    if n == 'illegal':
        return 'illegal 0x%08x' % ins.word
    if n in R_OPS:
        return '%s %s, %s, %s' % (n, r(ins.rd), r(ins.rs1), r(ins.rs2))
    if n in I_OPS or n in SHIFT_OPS or n == 'jalr':
        return '%s %s, %s, %d' % (n, r(ins.rd), r(ins.rs1), ins.imm)
    if n in LOADS:
        return '%s %s, %d(%s)' % (n, r(ins.rd), ins.imm, r(ins.rs1))
    if n in STORES:
        return '%s %s, %d(%s)' % (n, r(ins.rs2), ins.imm, r(ins.rs1))
    if n in BRANCHES:
        return '%s %s, %s, %d' % (n, r(ins.rs1), r(ins.rs2), ins.imm)
    if n == 'jal':
        return 'jal %s, %d' % (r(ins.rd), ins.imm)
    if n in ('lui', 'auipc'):
        return '%s %s, 0x%x' % (n, r(ins.rd), ins.imm >> 12)
    if n in CSR_OPS:
        src = ins.rs1 if n.endswith('i') else r(ins.rs1)
        return '%s %s, 0x%03x, %s' % (n, r(ins.rd), ins.csr, src)
    return n


# ---------------------------------------------------------------- assembler

class AsmError(Exception):
    def __init__(self, line, kind, msg):
        super().__init__('line %d: %s: %s' % (line, kind, msg))
        self.line, self.kind = line, kind


@dataclass
class ProgramImage:
    origin: int
    words: list
    symbols: dict = field(default_factory=dict)
    lines: dict = field(default_factory=dict)   # address -> source line number

    def __post_init__(self):
        if not self.words:
            raise ValueError('empty program image')
        if self.origin & 3:
            raise ValueError('origin must be 4-byte aligned')

    @property
    def end(self):
        return self.origin + 4 * len(self.words)

    def to_bytes(self):
        return b''.join(w.to_bytes(4, 'little') for w in self.words)

    @classmethod
    def from_bytes(cls, origin, data):
        data = bytes(data) + b'\0' * (-len(data) % 4)
        return cls(origin, [int.from_bytes(data[i:i + 4], 'little') for i in range(0, len(data), 4)])


_BASE_NAMES = set(R_OPS) | set(I_OPS) | set(SHIFT_OPS) | set(LOADS) | set(STORES) | set(BRANCHES) | \
    set(CSR_OPS) | set(SYSTEM) | {'jal', 'jalr', 'lui', 'auipc', 'fence'}
_PSEUDO = {'nop', 'li', 'la', 'mv', 'not', 'neg', 'j', 'jr', 'ret', 'call', 'beqz', 'bnez',
           'bltz', 'bgez', 'bgtz', 'blez', 'bgt', 'ble', 'bgtu', 'bleu', 'csrr', 'csrw', 'csrs', 'csrc', 'csrwi',
           'csrsi', 'csrci', 'seqz', 'snez'}
_MEM_RE = re.compile(r'^(.*)\((\w+)\)$')


def _split_ops(text):
    return [t.strip() for t in text.split(',')] if text.strip() else []


def _hi_lo(v):
    v &= 0xFFFFFFFF
    lo = sext(v, 12)
    hi = ((v - lo) >> 12) & 0xFFFFF
    return hi, lo


def _fits12(v):
    return -2048 <= v <= 2047


class _Asm:
    def __init__(self, source, origin, defines):
        self.src = source
        self.origin = origin
        self.syms = dict(defines or {})
        self.labels = set()
        self.sizes = {}

    def value(self, tok, ln, need_known=True):
        tok = tok.strip()
        try:
            return int(tok, 0)
        except ValueError:
            pass
        m = re.match(r'^(%hi|%lo)\((.+)\)$', tok)
        if m:
            v = self.value(m.group(2), ln, need_known)
            if v is None:
                return None
            hi, lo = _hi_lo(v)
            return hi if m.group(1) == '%hi' else lo
        m = re.match(r'^([A-Za-z_.$][\w.$]*)\s*([+-])\s*(\w+)$', tok)
        if m and m.group(1) in self.syms:
            off = int(m.group(3), 0)
            return self.syms[m.group(1)] + (off if m.group(2) == '+' else -off)
        if tok in self.syms:
            return self.syms[tok]
        if tok.lower() in CSRS:
            return CSRS[tok.lower()]
        if need_known:
            raise AsmError(ln, 'undefined-symbol', tok)
        return None

    def reg(self, tok, ln):
        t = tok.strip().lower()
        if t not in REGS:
            raise AsmError(ln, 'bad-register', tok)
        return REGS[t]

    def size(self, mn, ops, ln):
        if mn == 'li':
            v = self.value(ops[1], ln, need_known=False) if len(ops) > 1 else 0
            return 4 if v is not None and _fits12(sext(v, 32)) else 8
        if mn == 'la':
            return 8
        return 4

    def run(self):
        lines = []
        pc = self.origin
        # pass 1: addresses and labels
        for ln, raw in enumerate(self.src.splitlines(), 1):
            text = raw.split('#')[0].strip()
            while True:
                m = re.match(r'^([A-Za-z_.$][\w.$]*)\s*:(.*)$', text)
                if not m:
                    break
                name = m.group(1)
                if name in self.labels:
                    raise AsmError(ln, 'duplicate-label', name)
                self.labels.add(name)
                self.syms[name] = pc
                text = m.group(2).strip()
            if not text:
                continue
            parts = text.split(None, 1)
            mn = parts[0].lower()
            ops = _split_ops(parts[1] if len(parts) > 1 else '')
            if mn == '.org':
                addr = self.value(ops[0], ln)
                if addr < pc:
                    raise AsmError(ln, 'bad-org', 'cannot move backwards to 0x%x' % addr)
                pc = addr
                lines.append((ln, mn, ops, None))
                continue
            if mn in ('.equ', '.set'):
                self.syms[ops[0]] = self.value(ops[1], ln)
                continue
            if mn == '.word':
                lines.append((ln, mn, ops, pc))
                pc += 4 * len(ops)
                continue
            if mn == '.space':
                lines.append((ln, mn, ops, pc))
                pc += (self.value(ops[0], ln) + 3) & ~3
                continue
            if mn == '.align':
                n = 1 << self.value(ops[0], ln)
                pc = (pc + n - 1) & ~(n - 1)
                lines.append((ln, '.org', [str(pc)], None))
                continue
            if mn not in _BASE_NAMES and mn not in _PSEUDO:
                raise AsmError(ln, 'unknown-mnemonic', mn)
            n = self.size(mn, ops, ln)
            self.sizes[pc] = n
            lines.append((ln, mn, ops, pc))
            pc += n
        # pass 2: encode
        mem = {}
        srcmap = {}
        for ln, mn, ops, at in lines:
            if at is None:
                continue
            if mn == '.word':
                for i, t in enumerate(ops):
                    mem[at + 4 * i] = self.value(t, ln) & 0xFFFFFFFF
                continue
            if mn == '.space':
                for a in range(at, at + ((self.value(ops[0], ln) + 3) & ~3), 4):
                    mem[a] = 0
                continue
            try:
                words = self.emit(mn, ops, at, ln)
            except EncodeError as e:
                raise AsmError(ln, 'immediate-range', str(e))
            except IndexError:
                raise AsmError(ln, 'operand-count', mn)
            for i, w in enumerate(words):
                mem[at + 4 * i] = w
                srcmap[at + 4 * i] = ln
        if not mem:
            raise AsmError(0, 'empty', 'no code or data')
        end = max(mem) + 4
        words = [mem.get(a, 0) for a in range(self.origin, end, 4)]
        return ProgramImage(self.origin, words, {k: v for k, v in self.syms.items() if k in self.labels}, srcmap)

    def emit(self, mn, ops, pc, ln):
        R, V = self.reg, self.value
        if mn in R_OPS:
            return [encode(mn, rd=R(ops[0], ln), rs1=R(ops[1], ln), rs2=R(ops[2], ln))]
        if mn in I_OPS or mn in SHIFT_OPS:
            return [encode(mn, rd=R(ops[0], ln), rs1=R(ops[1], ln), imm=V(ops[2], ln))]
        if mn in LOADS or mn in STORES or mn == 'jalr':
            if mn == 'jalr' and len(ops) == 1:
                return [encode('jalr', rd=1, rs1=R(ops[0], ln))]
            if mn == 'jalr' and len(ops) == 3:
                return [encode('jalr', rd=R(ops[0], ln), rs1=R(ops[1], ln), imm=V(ops[2], ln))]
            m = _MEM_RE.match(ops[1])
            if not m:
                raise AsmError(ln, 'bad-operand', ops[1])
            off = V(m.group(1), ln) if m.group(1).strip() else 0
            base = R(m.group(2), ln)
            if mn in STORES:
                return [encode(mn, rs1=base, rs2=R(ops[0], ln), imm=off)]
            return [encode(mn, rd=R(ops[0], ln), rs1=base, imm=off)]
        if mn in BRANCHES:
            return [encode(mn, rs1=R(ops[0], ln), rs2=R(ops[1], ln), imm=self.target(ops[2], pc, ln))]
        if mn == 'jal':
            if len(ops) == 1:
                return [encode('jal', rd=1, imm=self.target(ops[0], pc, ln))]
            return [encode('jal', rd=R(ops[0], ln), imm=self.target(ops[1], pc, ln))]
        if mn in ('lui', 'auipc'):
            return [encode(mn, rd=R(ops[0], ln), imm=V(ops[1], ln))]
        if mn in CSR_OPS:
            if mn.endswith('i'):
                return [encode(mn, rd=R(ops[0], ln), csr=V(ops[1], ln), imm=V(ops[2], ln))]
            return [encode(mn, rd=R(ops[0], ln), csr=V(ops[1], ln), rs1=R(ops[2], ln))]
        if mn == 'fence' or mn in SYSTEM:
            return [encode(mn)]
        # pseudo-instructions
        if mn == 'nop':
            return [encode('addi')]
        if mn == 'li':
            rd, v = R(ops[0], ln), V(ops[1], ln)
            if not -(1 << 31) <= v < (1 << 32):
                raise AsmError(ln, 'immediate-range', 'li value %d' % v)
            if self.sizes.get(pc, 8) == 4:
                return [encode('addi', rd=rd, imm=sext(v, 32))]
            hi, lo = _hi_lo(v)
            return [encode('lui', rd=rd, imm=hi), encode('addi', rd=rd, rs1=rd, imm=lo)]
        if mn == 'la':
            rd, v = R(ops[0], ln), V(ops[1], ln)
            hi, lo = _hi_lo(v)
            return [encode('lui', rd=rd, imm=hi), encode('addi', rd=rd, rs1=rd, imm=lo)]
        if mn == 'mv':
            return [encode('addi', rd=R(ops[0], ln), rs1=R(ops[1], ln))]
        if mn == 'not':
            return [encode('xori', rd=R(ops[0], ln), rs1=R(ops[1], ln), imm=-1)]
        if mn == 'neg':
            return [encode('sub', rd=R(ops[0], ln), rs2=R(ops[1], ln))]
        if mn == 'seqz':
            return [encode('sltiu', rd=R(ops[0], ln), rs1=R(ops[1], ln), imm=1)]
        if mn == 'snez':
            return [encode('sltu', rd=R(ops[0], ln), rs2=R(ops[1], ln))]
        if mn == 'j':
            return [encode('jal', rd=0, imm=self.target(ops[0], pc, ln))]
        if mn == 'call':
            return [encode('jal', rd=1, imm=self.target(ops[0], pc, ln))]
        if mn == 'jr':
            return [encode('jalr', rs1=R(ops[0], ln))]
        if mn == 'ret':
            return [encode('jalr', rs1=1)]
        if mn in ('beqz', 'bnez', 'bltz', 'bgez'):
            b = {'beqz': 'beq', 'bnez': 'bne', 'bltz': 'blt', 'bgez': 'bge'}[mn]
            return [encode(b, rs1=R(ops[0], ln), rs2=0, imm=self.target(ops[1], pc, ln))]
        if mn in ('bgtz', 'blez'):
            b = {'bgtz': 'blt', 'blez': 'bge'}[mn]
            return [encode(b, rs1=0, rs2=R(ops[0], ln), imm=self.target(ops[1], pc, ln))]
        if mn in ('bgt', 'ble', 'bgtu', 'bleu'):
            b = {'bgt': 'blt', 'ble': 'bge', 'bgtu': 'bltu', 'bleu': 'bgeu'}[mn]
            return [encode(b, rs1=R(ops[1], ln), rs2=R(ops[0], ln), imm=self.target(ops[2], pc, ln))]
        if mn == 'csrr':
            return [encode('csrrs', rd=R(ops[0], ln), csr=V(ops[1], ln))]
        if mn in ('csrw', 'csrs', 'csrc'):
            return [encode('csrr' + mn[3], csr=V(ops[0], ln), rs1=R(ops[1], ln))]
        if mn in ('csrwi', 'csrsi', 'csrci'):
            return [encode('csrr' + mn[3] + 'i', csr=V(ops[0], ln), imm=V(ops[1], ln))]
        raise AsmError(ln, 'unknown-mnemonic', mn)

    def target(self, tok, pc, ln):
        return self.value(tok, ln) - pc


def assemble(source, origin=0, defines=None):
    """Assemble RV32IM source into a ProgramImage. Raises AsmError with a line number."""
    return _Asm(source, origin, defines).run()

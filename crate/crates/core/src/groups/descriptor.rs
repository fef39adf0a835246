use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::linalg::rational::{is_p_integral, is_p_unit, rat};
use crate::linalg::{Modulus, QMatrix, Rational, Subspace, ZpMatrix};

use super::character::{symmetric_form_terms, Character};
use super::GroupError;

/// Recipe for a split reductive group scheme embedded block-diagonally in
/// `GL_n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupDescriptor {
    Gl(usize),
    Sl(usize),
    Sp { form: QMatrix },
    Gsp { form: QMatrix },
    /// Special orthogonal group of a symmetric form; only for odd `p`.
    So { form: QMatrix },
    Product(Vec<GroupDescriptor>),
    /// Pairs `(g1, g2)` with `left_char(g1) = right_char(g2)`; each character
    /// refers to the blocks of its own factor.
    FiberProduct {
        left: Box<GroupDescriptor>,
        right: Box<GroupDescriptor>,
        left_char: Character,
        right_char: Character,
    },
    KernelOfCharacter {
        group: Box<GroupDescriptor>,
        character: Character,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BlockKind {
    Gl,
    Sl,
    Sp(QMatrix),
    Gsp(QMatrix),
    So(QMatrix),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub kind: BlockKind,
    pub offset: usize,
    pub size: usize,
}

impl Block {
    pub fn indices(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.size
    }
}

/// Normal form of a descriptor: simple blocks on the diagonal plus relations
/// `chi_1 = chi_2` between block characters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockForm {
    pub size: usize,
    pub blocks: Vec<Block>,
    pub relations: Vec<(Character, Character)>,
}

/// Standard symplectic form `[[0, I], [-I, 0]]` of size `2n`.
pub fn standard_symplectic(n: usize) -> QMatrix {
    let mut j = QMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = rat(1);
        j[(n + i, i)] = rat(-1);
    }
    j
}

/// Split symmetric form with ones on the antidiagonal.
pub fn antidiagonal_form(n: usize) -> QMatrix {
    let mut s = QMatrix::zeros(n, n);
    for i in 0..n {
        s[(i, n - 1 - i)] = rat(1);
    }
    s
}

impl GroupDescriptor {
    pub fn gsp(n2: usize) -> Self {
        GroupDescriptor::Gsp { form: standard_symplectic(n2 / 2) }
    }

    pub fn sp(n2: usize) -> Self {
        GroupDescriptor::Sp { form: standard_symplectic(n2 / 2) }
    }

    pub fn fiber(left: GroupDescriptor, right: GroupDescriptor, left_char: Character, right_char: Character) -> Self {
        GroupDescriptor::FiberProduct { left: Box::new(left), right: Box::new(right), left_char, right_char }
    }

    pub fn block_form(&self) -> Result<BlockForm, GroupError> {
        let simple = |kind: BlockKind, size: usize| BlockForm {
            size,
            blocks: vec![Block { kind, offset: 0, size }],
            relations: Vec::new(),
        };
        let form = match self {
            GroupDescriptor::Gl(n) => {
                nonzero(*n)?;
                simple(BlockKind::Gl, *n)
            }
            GroupDescriptor::Sl(n) => {
                nonzero(*n)?;
                simple(BlockKind::Sl, *n)
            }
            GroupDescriptor::Sp { form } => {
                check_alternating(form)?;
                simple(BlockKind::Sp(form.clone()), form.rows())
            }
            GroupDescriptor::Gsp { form } => {
                check_alternating(form)?;
                simple(BlockKind::Gsp(form.clone()), form.rows())
            }
            GroupDescriptor::So { form } => {
                check_symmetric(form)?;
                simple(BlockKind::So(form.clone()), form.rows())
            }
            GroupDescriptor::Product(parts) => {
                if parts.is_empty() {
                    return Err(GroupError::InvalidDescriptor("empty product".into()));
                }
                let forms = parts.iter().map(|g| g.block_form()).collect::<Result<Vec<_>, _>>()?;
                concat(forms)
            }
            GroupDescriptor::FiberProduct { left, right, left_char, right_char } => {
                let l = left.block_form()?;
                let r = right.block_form()?;
                l.validate_character(left_char)?;
                r.validate_character(right_char)?;
                let shift = l.blocks.len();
                let mut f = concat(vec![l, r]);
                f.relations.push((left_char.clone(), right_char.shift_blocks(shift)));
                f
            }
            GroupDescriptor::KernelOfCharacter { group, character } => {
                let mut f = group.block_form()?;
                f.validate_character(character)?;
                f.relations.push((character.clone(), Character::trivial()));
                f
            }
        };
        Ok(form)
    }

    /// Classical dimension formula.
    pub fn classical_dim(&self) -> usize {
        match self {
            GroupDescriptor::Gl(n) => n * n,
            GroupDescriptor::Sl(n) => n * n - 1,
            GroupDescriptor::Sp { form } => {
                let n = form.rows() / 2;
                n * (2 * n + 1)
            }
            GroupDescriptor::Gsp { form } => {
                let n = form.rows() / 2;
                n * (2 * n + 1) + 1
            }
            GroupDescriptor::So { form } => form.rows() * (form.rows() - 1) / 2,
            GroupDescriptor::Product(parts) => parts.iter().map(|g| g.classical_dim()).sum(),
            GroupDescriptor::FiberProduct { left, right, .. } => left.classical_dim() + right.classical_dim() - 1,
            GroupDescriptor::KernelOfCharacter { group, .. } => group.classical_dim() - 1,
        }
    }
}

fn nonzero(n: usize) -> Result<(), GroupError> {
    if n == 0 {
        return Err(GroupError::InvalidDescriptor("block of size 0".into()));
    }
    Ok(())
}

fn check_alternating(form: &QMatrix) -> Result<(), GroupError> {
    if !form.is_square() || form.rows() == 0 || form.rows() % 2 != 0 {
        return Err(GroupError::InvalidDescriptor("symplectic form must be square of even size".into()));
    }
    if form.transpose() != form.scale(&rat(-1)) {
        return Err(GroupError::InvalidDescriptor("symplectic form is not alternating".into()));
    }
    if form.det().is_zero() {
        return Err(GroupError::InvalidDescriptor("symplectic form is degenerate".into()));
    }
    Ok(())
}

fn check_symmetric(form: &QMatrix) -> Result<(), GroupError> {
    if !form.is_square() || form.rows() == 0 {
        return Err(GroupError::InvalidDescriptor("orthogonal form must be square".into()));
    }
    if form.transpose() != *form {
        return Err(GroupError::InvalidDescriptor("orthogonal form is not symmetric".into()));
    }
    if form.det().is_zero() {
        return Err(GroupError::InvalidDescriptor("orthogonal form is degenerate".into()));
    }
    Ok(())
}

fn concat(forms: Vec<BlockForm>) -> BlockForm {
    let mut out = BlockForm { size: 0, blocks: Vec::new(), relations: Vec::new() };
    for f in forms {
        let shift = out.blocks.len();
        for b in f.blocks {
            out.blocks.push(Block { offset: b.offset + out.size, ..b });
        }
        for (a, b) in f.relations {
            out.relations.push((a.shift_blocks(shift), b.shift_blocks(shift)));
        }
        out.size += f.size;
    }
    out
}

impl BlockForm {
    pub fn block_of(&self, i: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.indices().contains(&i))
    }

    /// True if `(i, j)` lies in a diagonal block.
    pub fn in_block(&self, i: usize, j: usize) -> bool {
        self.block_of(i).is_some() && self.block_of(i) == self.block_of(j)
    }

    fn coord(&self, i: usize, j: usize) -> usize {
        i * self.size + j
    }

    /// Linearized defining equations at the identity, as functionals on
    /// flattened `n x n` matrices.
    pub fn lie_equations(&self) -> Vec<Vec<Rational>> {
        let n = self.size;
        let zero = || vec![Rational::zero(); n * n];
        let mut eqs = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if !self.in_block(i, j) {
                    let mut f = zero();
                    f[self.coord(i, j)] = Rational::one();
                    eqs.push(f);
                }
            }
        }
        for (bi, b) in self.blocks.iter().enumerate() {
            let o = b.offset;
            let form_eqs = |form: &QMatrix, similitude: bool| {
                let mut out = Vec::new();
                let mu = similitude.then(|| self.character_differential(&Character::similitude(bi)));
                for a in 0..b.size {
                    for c in a..b.size {
                        let mut f = zero();
                        for (k, l, coeff) in symmetric_form_terms(form, a, c) {
                            f[self.coord(o + k, o + l)] += coeff;
                        }
                        if let Some(mu) = &mu {
                            for (x, m) in f.iter_mut().zip(mu) {
                                *x -= m * &form[(a, c)];
                            }
                        }
                        if f.iter().any(|x| !x.is_zero()) {
                            out.push(f);
                        }
                    }
                }
                out
            };
            match &b.kind {
                BlockKind::Gl => {}
                BlockKind::Sl => eqs.push(self.character_differential(&Character::det(bi))),
                BlockKind::Sp(form) | BlockKind::So(form) => eqs.extend(form_eqs(form, false)),
                BlockKind::Gsp(form) => eqs.extend(form_eqs(form, true)),
            }
        }
        for (a, b) in &self.relations {
            let da = self.character_differential(a);
            let db = self.character_differential(b);
            eqs.push(da.iter().zip(&db).map(|(x, y)| x - y).collect());
        }
        eqs
    }

    pub fn lie_algebra(&self) -> Subspace {
        Subspace::annihilated_by(self.size * self.size, &self.lie_equations())
    }

    fn has_orthogonal(&self) -> bool {
        self.blocks.iter().any(|b| matches!(b.kind, BlockKind::So(_)))
    }

    /// Exact membership in `G(Q)`.
    pub fn contains(&self, g: &QMatrix) -> bool {
        if g.rows() != self.size || g.cols() != self.size {
            return false;
        }
        for i in 0..self.size {
            for j in 0..self.size {
                if !self.in_block(i, j) && !g[(i, j)].is_zero() {
                    return false;
                }
            }
        }
        for b in &self.blocks {
            let idx: Vec<usize> = b.indices().collect();
            let gb = g.principal(&idx);
            let ok = match &b.kind {
                BlockKind::Gl => !gb.det().is_zero(),
                BlockKind::Sl => gb.det().is_one(),
                BlockKind::Sp(form) => gb.transpose().mul(form).mul(&gb) == *form,
                BlockKind::So(form) => gb.transpose().mul(form).mul(&gb) == *form && gb.det().is_one(),
                BlockKind::Gsp(form) => {
                    let gjg = gb.transpose().mul(form).mul(&gb);
                    let (a, c) = first_nonzero(form);
                    let mu = &gjg[(a, c)] / &form[(a, c)];
                    !mu.is_zero() && gjg == form.scale(&mu)
                }
            };
            if !ok {
                return false;
            }
        }
        self.relations.iter().all(|(a, b)| {
            matches!((self.eval_character(a, g), self.eval_character(b, g)), (Some(x), Some(y)) if x == y)
        })
    }

    /// Membership in `G(Z_p)`: a rational point with `p`-integral entries and
    /// unit determinant.
    pub fn contains_integral(&self, g: &QMatrix, p: u64) -> bool {
        self.contains(g) && g.data().iter().all(|x| is_p_integral(x, p)) && is_p_unit(&g.det(), p)
    }

    /// Membership in `G(Z/p^N)`.
    pub fn contains_mod(&self, g: &ZpMatrix) -> Result<bool, GroupError> {
        let md = g.modulus();
        if md.p == 2 && self.has_orthogonal() {
            return Err(GroupError::OrthogonalAtTwo);
        }
        if g.rows() != self.size || g.cols() != self.size {
            return Ok(false);
        }
        for i in 0..self.size {
            for j in 0..self.size {
                if !self.in_block(i, j) && g[(i, j)] != 0 {
                    return Ok(false);
                }
            }
        }
        for b in &self.blocks {
            if !self.block_contains_mod(b, g, md)? {
                return Ok(false);
            }
        }
        Ok(self.relations_hold_mod(g))
    }

    pub(crate) fn relations_hold_mod(&self, g: &ZpMatrix) -> bool {
        self.relations.iter().all(|(a, b)| {
            matches!((self.eval_character_mod(a, g), self.eval_character_mod(b, g)), (Some(x), Some(y)) if x == y)
        })
    }

    /// Membership of the diagonal block `b` of `g` in the simple group of `b`.
    pub(crate) fn block_contains_mod(&self, b: &Block, g: &ZpMatrix, md: Modulus) -> Result<bool, GroupError> {
        let idx: Vec<usize> = b.indices().collect();
        let gb = g.principal(&idx);
        block_member_mod(&b.kind, &gb, md)
    }
}

/// Membership of a square residue matrix in a simple group.
pub(crate) fn block_member_mod(kind: &BlockKind, gb: &ZpMatrix, md: Modulus) -> Result<bool, GroupError> {
    let reduce = |f: &QMatrix| ZpMatrix::reduce(f, md).map_err(|_| GroupError::FormNotIntegral(md.p));
    Ok(match kind {
        BlockKind::Gl => md.is_unit(gb.det()),
        BlockKind::Sl => gb.det() == 1 % md.m,
        BlockKind::Sp(form) => {
            let j = reduce(form)?;
            gb.transpose().mul(&j)?.mul(gb)? == j
        }
        BlockKind::So(form) => {
            if md.p == 2 {
                return Err(GroupError::OrthogonalAtTwo);
            }
            let s = reduce(form)?;
            gb.transpose().mul(&s)?.mul(gb)? == s && gb.det() == 1 % md.m
        }
        BlockKind::Gsp(form) => {
            let j = reduce(form)?;
            let gjg = gb.transpose().mul(&j)?.mul(gb)?;
            let (a, c) = first_unit(&j).ok_or(GroupError::FormNotIntegral(md.p))?;
            let mu = md.mul(gjg[(a, c)], md.inv(j[(a, c)]).unwrap());
            md.is_unit(mu) && (0..j.rows()).all(|x| (0..j.cols()).all(|y| gjg[(x, y)] == md.mul(mu, j[(x, y)])))
        }
    })
}

fn first_nonzero(m: &QMatrix) -> (usize, usize) {
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if !m[(i, j)].is_zero() {
                return (i, j);
            }
        }
    }
    panic!("zero form")
}

fn first_unit(m: &ZpMatrix) -> Option<(usize, usize)> {
    let md = m.modulus();
    (0..m.rows()).flat_map(|i| (0..m.cols()).map(move |j| (i, j))).find(|&(i, j)| md.is_unit(m[(i, j)]))
}

/// A validated descriptor together with its normal form and Lie algebra.
#[derive(Clone, Debug)]
pub struct Group {
    pub descriptor: GroupDescriptor,
    pub form: BlockForm,
    pub lie: Subspace,
}

impl Group {
    pub fn new(descriptor: GroupDescriptor) -> Result<Self, GroupError> {
        let form = descriptor.block_form()?;
        let lie = form.lie_algebra();
        Ok(Group { descriptor, form, lie })
    }

    pub fn size(&self) -> usize {
        self.form.size
    }

    pub fn dim(&self) -> usize {
        self.lie.dim()
    }

    pub fn contains(&self, g: &QMatrix) -> bool {
        self.form.contains(g)
    }

    pub fn contains_integral(&self, g: &QMatrix, p: u64) -> bool {
        self.form.contains_integral(g, p)
    }

    pub fn contains_mod(&self, g: &ZpMatrix) -> Result<bool, GroupError> {
        self.form.contains_mod(g)
    }

    /// Characters generating the maximal torus quotient: `det` on `GL`
    /// blocks and the similitude on `GSp` blocks. Relations of fiber products
    /// and kernels are not eliminated here; callers measure the span of the
    /// differentials on the Lie algebra.
    pub fn torus_quotient(&self) -> Vec<Character> {
        self.form
            .blocks
            .iter()
            .enumerate()
            .filter_map(|(i, b)| match b.kind {
                BlockKind::Gl => Some(Character::det(i)),
                BlockKind::Gsp(_) => Some(Character::similitude(i)),
                _ => None,
            })
            .collect()
    }

    /// Differentials of `chars` restricted to the Lie algebra, in the
    /// coordinates of its stored basis.
    pub fn restricted_differentials(&self, chars: &[Character]) -> QMatrix {
        let basis = self.lie.basis_vectors();
        let rows = chars
            .iter()
            .map(|c| {
                let d = self.form.character_differential(c);
                basis.iter().map(|v| v.iter().zip(&d).map(|(a, b)| a * b).sum()).collect()
            })
            .collect::<Vec<Vec<Rational>>>();
        if rows.is_empty() {
            return QMatrix::zeros(0, basis.len());
        }
        QMatrix::from_rows(rows)
    }
}

//! Periodic table lookup and the valence model used for implicit hydrogens.

const SYMBOLS: [&str; 119] = [
    "*", "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S",
    "Cl", "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge",
    "As", "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd",
    "In", "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd",
    "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg",
    "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm",
    "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn",
    "Nh", "Fl", "Mc", "Lv", "Ts", "Og",
];

pub const HYDROGEN: u8 = 1;
pub const BORON: u8 = 5;
pub const CARBON: u8 = 6;
pub const NITROGEN: u8 = 7;
pub const OXYGEN: u8 = 8;
pub const PHOSPHORUS: u8 = 15;
pub const SULFUR: u8 = 16;

/// Element symbol for an atomic number in `1..=118`.
pub fn symbol(atomic_number: u8) -> &'static str {
    SYMBOLS[atomic_number as usize]
}

pub fn atomic_number(symbol: &str) -> Option<u8> {
    SYMBOLS
        .iter()
        .skip(1)
        .position(|s| *s == symbol)
        .map(|p| (p + 1) as u8)
}

/// Elements that may be written without brackets.
pub fn is_organic_subset(atomic_number: u8) -> bool {
    matches!(atomic_number, 5 | 6 | 7 | 8 | 9 | 15 | 16 | 17 | 35 | 53)
}

/// Elements that may be written as bare lowercase aromatic atoms.
pub fn is_aromatic_organic(atomic_number: u8) -> bool {
    matches!(atomic_number, 5 | 6 | 7 | 8 | 15 | 16)
}

/// Lowercase aromatic symbols accepted inside brackets, two-letter forms first.
pub const AROMATIC_BRACKET_SYMBOLS: [(&str, u8); 9] = [
    ("se", 34),
    ("as", 33),
    ("te", 52),
    ("si", 14),
    ("b", 5),
    ("c", 6),
    ("n", 7),
    ("o", 8),
    ("p", 15),
];

fn neutral_valences(atomic_number: u8) -> Option<&'static [u8]> {
    Some(match atomic_number {
        HYDROGEN => &[1],
        BORON => &[3],
        CARBON => &[4],
        NITROGEN => &[3],
        OXYGEN => &[2],
        PHOSPHORUS => &[3, 5],
        SULFUR => &[2, 4, 6],
        9 | 17 | 35 | 53 => &[1],
        _ => return None,
    })
}

/// Allowed total valences (bond order sum plus hydrogens) after adjusting for
/// formal charge. `None` means the element is outside the valence model and is
/// not checked.
pub fn allowed_valences(atomic_number: u8, charge: i8) -> Option<Vec<u8>> {
    let base = neutral_valences(atomic_number)?;
    let charge = charge as i32;
    let adjusted = base.iter().filter_map(|&v| {
        let v = v as i32;
        let a = match atomic_number {
            BORON => v - charge,
            CARBON | HYDROGEN => v - charge.abs(),
            _ => v + charge,
        };
        (a >= 0).then_some(a as u8)
    });
    Some(adjusted.collect())
}

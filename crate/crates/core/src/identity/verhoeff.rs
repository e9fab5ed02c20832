//! Verhoeff check digits over the dihedral group D5.

const D: [[u8; 10]; 10] = [
    [0, 1, 2, 3, 4, 5, 6, 7, 8, 9],
    [1, 2, 3, 4, 0, 6, 7, 8, 9, 5],
    [2, 3, 4, 0, 1, 7, 8, 9, 5, 6],
    [3, 4, 0, 1, 2, 8, 9, 5, 6, 7],
    [4, 0, 1, 2, 3, 9, 5, 6, 7, 8],
    [5, 9, 8, 7, 6, 0, 4, 3, 2, 1],
    [6, 5, 9, 8, 7, 1, 0, 4, 3, 2],
    [7, 6, 5, 9, 8, 2, 1, 0, 4, 3],
    [8, 7, 6, 5, 9, 3, 2, 1, 0, 4],
    [9, 8, 7, 6, 5, 4, 3, 2, 1, 0],
];

const P: [[u8; 10]; 8] = [
    [0, 1, 2, 3, 4, 5, 6, 7, 8, 9],
    [1, 5, 7, 6, 2, 8, 3, 0, 9, 4],
    [5, 8, 0, 3, 7, 9, 6, 1, 4, 2],
    [8, 9, 1, 6, 0, 4, 3, 5, 2, 7],
    [9, 4, 5, 3, 1, 2, 6, 8, 7, 0],
    [4, 2, 8, 6, 5, 7, 3, 9, 0, 1],
    [2, 7, 9, 3, 8, 0, 6, 4, 1, 5],
    [7, 0, 4, 6, 9, 1, 3, 2, 5, 8],
];

const INV: [u8; 10] = [0, 4, 3, 2, 1, 5, 6, 7, 8, 9];

fn digits(s: &str) -> Option<Vec<u8>> {
    s.bytes().map(|b| b.is_ascii_digit().then(|| b - b'0')).collect()
}

/// Running checksum, with `offset` shifting the position of the rightmost
/// digit (1 when a check digit is still to be appended).
fn checksum(digits: &[u8], offset: usize) -> u8 {
    digits
        .iter()
        .rev()
        .enumerate()
        .fold(0, |c, (i, &d)| D[c as usize][P[(i + offset) % 8][d as usize] as usize])
}

/// Check digit to append to `payload`, or `None` if it is not all digits.
pub fn check_digit(payload: &str) -> Option<u8> {
    let digits = digits(payload)?;
    Some(INV[checksum(&digits, 1) as usize])
}

pub fn is_valid(number: &str) -> bool {
    match digits(number) {
        Some(d) if !d.is_empty() => checksum(&d, 0) == 0,
        _ => false,
    }
}

/// Twelve digits, no leading 0 or 1, valid Verhoeff check digit.
pub fn is_valid_national_id(id: &str) -> bool {
    id.len() == 12 && !id.starts_with(['0', '1']) && is_valid(id)
}

/// Appends the check digit to an 11-digit payload.
pub fn complete_national_id(payload: &str) -> Option<String> {
    if payload.len() != 11 {
        return None;
    }
    let c = check_digit(payload)?;
    Some(format!("{payload}{c}"))
}

//! Two-dimensional Morton (z-curve) indices with x in the even bits.

use super::MeshError;

const MAX_LEVEL: u32 = 31;

fn spread(mut v: u64) -> u64 {
    v &= 0xffff_ffff;
    v = (v | (v << 16)) & 0x0000_ffff_0000_ffff;
    v = (v | (v << 8)) & 0x00ff_00ff_00ff_00ff;
    v = (v | (v << 4)) & 0x0f0f_0f0f_0f0f_0f0f;
    v = (v | (v << 2)) & 0x3333_3333_3333_3333;
    (v | (v << 1)) & 0x5555_5555_5555_5555
}

fn compact(mut v: u64) -> u64 {
    v &= 0x5555_5555_5555_5555;
    v = (v | (v >> 1)) & 0x3333_3333_3333_3333;
    v = (v | (v >> 2)) & 0x0f0f_0f0f_0f0f_0f0f;
    v = (v | (v >> 4)) & 0x00ff_00ff_00ff_00ff;
    v = (v | (v >> 8)) & 0x0000_ffff_0000_ffff;
    (v | (v >> 16)) & 0xffff_ffff
}

pub fn morton_encode(i: u64, j: u64, level: u32) -> Result<u64, MeshError> {
    if level > MAX_LEVEL {
        return Err(MeshError::MortonRange(format!("level {level} exceeds {MAX_LEVEL}")));
    }
    let side = 1u64 << level;
    if i >= side || j >= side {
        return Err(MeshError::MortonRange(format!(
            "({i}, {j}) outside [0, {side}) at level {level}"
        )));
    }
    Ok(spread(i) | (spread(j) << 1))
}

pub fn morton_decode(index: u64, level: u32) -> Result<(u64, u64), MeshError> {
    if level > MAX_LEVEL {
        return Err(MeshError::MortonRange(format!("level {level} exceeds {MAX_LEVEL}")));
    }
    if index >= 1u64 << (2 * level) {
        return Err(MeshError::MortonRange(format!(
            "index {index} outside [0, 4^{level})"
        )));
    }
    Ok((compact(index), compact(index >> 1)))
}

use alloc::vec::Vec;
use core::fmt::Debug;

/// Saturating histogram counter.
///
/// `u8` is the compact deployment width; wider types serve as exact
/// counters in tests. Saturation clamps and never wraps, so merging
/// saturated counters gives the same result as counting from scratch.
pub trait Counter: Copy + Default + Eq + Debug + Send + Sync + 'static {
    const MAX: Self;
    const BYTES: usize;

    fn bump(&mut self);
    fn merged(self, other: Self) -> Self;
    fn get(self) -> u64;
    fn write_le(self, out: &mut Vec<u8>);
    fn read_le(bytes: &[u8]) -> Self;
}

macro_rules! impl_counter {
    ($t:ty) => {
        impl Counter for $t {
            const MAX: Self = <$t>::MAX;
            const BYTES: usize = core::mem::size_of::<$t>();

            #[inline]
            fn bump(&mut self) {
                *self = self.saturating_add(1);
            }

            #[inline]
            fn merged(self, other: Self) -> Self {
                self.saturating_add(other)
            }

            #[inline]
            fn get(self) -> u64 {
                u64::from(self)
            }

            fn write_le(self, out: &mut Vec<u8>) {
                out.extend_from_slice(&self.to_le_bytes());
            }

            fn read_le(bytes: &[u8]) -> Self {
                let mut buf = [0u8; core::mem::size_of::<$t>()];
                buf.copy_from_slice(bytes);
                <$t>::from_le_bytes(buf)
            }
        }
    };
}

impl_counter!(u8);
impl_counter!(u16);
impl_counter!(u32);

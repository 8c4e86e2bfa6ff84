//! C ABI for the qlrad toolkit. Placeholder, filled in alongside the core.

#[no_mangle]
pub extern "C" fn qlrad_abi_version() -> u32 {
    1
}

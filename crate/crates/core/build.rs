fn main() {
    // LAPACK routines (dsbevx, dpbtrf/dpbtrs) come from the system OpenBLAS.
    println!("cargo:rustc-link-lib=dylib=openblas");
}

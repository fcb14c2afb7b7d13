// LAPACK/BLAS come from the system OpenBLAS shared library.
fn main() {
    println!("cargo:rustc-link-lib=openblas");
}

fn main() {
    // Die quietly on SIGPIPE like other line-oriented tools, instead of
    // panicking when stdout is closed early (e.g. piped into `head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    std::process::exit(sentibench::cli::run());
}

use sl2cert::families::{verify_certificate, VerifyOutcome};
use sl2cert::reduce::{factorize_matrix, PipelineConfig};
use sl2cert::ring::RingDesc;
use sl2cert::wordgen::{generate_matrix, WordGenConfig};

fn main() {
    let fields = [-1i64, -2, -3, -7, -11, -19, -43, -67, -163];
    let wg = WordGenConfig { word_len: 8, param_max_norm: 20, seed: 20260810 };
    let mut grand_max_len = 0usize;
    let t_all = std::time::Instant::now();
    for d in fields {
        let ring = RingDesc::new(d).unwrap();
        let mut max_len = 0usize;
        let mut max_t = 0u64;
        let mut heavy = 0u32;
        let mut slowest = std::time::Duration::ZERO;
        let t0 = std::time::Instant::now();
        for i in 0..25u64 {
            let m = generate_matrix(&ring, &wg, i);
            let t1 = std::time::Instant::now();
            match factorize_matrix(ring, &m, PipelineConfig::default()) {
                Ok((cert, stats)) => {
                    assert!(matches!(verify_certificate(&cert), VerifyOutcome::Ok));
                    max_len = max_len.max(cert.factors.len());
                    max_t = max_t.max(stats.max_exponent);
                    if stats.reduce_b_calls > 0 { heavy += 1; }
                }
                Err(e) => eprintln!("d={d} i={i}: ERROR {e}"),
            }
            slowest = slowest.max(t1.elapsed());
        }
        grand_max_len = grand_max_len.max(max_len);
        eprintln!(
            "d={d:>5}: 25 ok in {:>9.2?}  max_len={max_len:>3}  max_t={max_t:>5}  heavy={heavy:>2}  slowest={slowest:.2?}",
            t0.elapsed()
        );
    }
    eprintln!("total {:?}, grand max cert len = {grand_max_len}", t_all.elapsed());
}

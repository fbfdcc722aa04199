use cpsim_core::harness::*;

fn main() {
    let s = sanity_no_fusion(&[1,2,3]).unwrap();
    for l in s.check_lines() { println!("{l}"); }
    let e1 = experiment_e1_v2v_vs_v2x(&[1, 2]).unwrap();
    for l in e1.check_lines() { println!("{l}"); }
    let e2 = experiment_e2_range_shape(&[1, 2]).unwrap();
    for l in e2.check_lines() { println!("{l}"); }
    let e4 = experiment_e4_noise_sweep(&[1, 2]).unwrap();
    for (name, content) in &e4.tables { if name == "table.csv" { println!("{content}"); } }
    for l in e4.check_lines() { println!("{l}"); }
}

//! gnuplot script emitted next to each trajectory.

/// Script drawing the gaps on a log scale and, in two dimensions, the path of `x`.
pub fn plot_script(is_dynamics: bool, dim: usize) -> String {
    let axis = if is_dynamics { "t" } else { "k" };
    let mut s = format!(
        "# gnuplot script; run `gnuplot plot.gp` inside this directory\n\
         set datafile separator ','\n\
         set key autotitle columnhead\n\
         set terminal pngcairo size 900,600\n\
         set output 'gap.png'\n\
         set logscale y\n\
         set format y '%.0e'\n\
         set xlabel '{axis}'\n\
         set ylabel 'gap'\n\
         plot 'trajectory.csv' using '{axis}':'f_gap' with lines, \\\n\
         \x20    '' using '{axis}':'phi_gap' with lines\n"
    );
    if dim == 2 {
        s.push_str(
            "set output 'path.png'\n\
             unset logscale\n\
             set format y '%g'\n\
             set xlabel 'x0'\n\
             set ylabel 'x1'\n\
             set size ratio -1\n\
             plot 'trajectory.csv' using 'x0':'x1' with linespoints pointsize 0.4 title 'x', \\\n\
             \x20    '' using 'z0':'z1' with lines title 'z'\n",
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn includes_path_plot_only_in_two_dimensions() {
        assert!(plot_script(false, 2).contains("path.png"));
        assert!(!plot_script(false, 3).contains("path.png"));
        assert!(plot_script(true, 2).contains("'t':'f_gap'"));
    }
}

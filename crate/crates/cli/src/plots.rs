//! gnuplot scripts over the emitted CSV files.
//!
//! Every script reads its data by relative path, so run it from the output
//! directory: `cd out && gnuplot sweep_classify.gp`.

use qsdyn::sweep::Axis;

const PREAMBLE: &str = "set datafile separator ','\nset key autotitle columnhead\n";

fn terminal(png: &str, width: u32, height: u32) -> String {
    format!("set terminal pngcairo size {width},{height}\nset output '{png}'\n")
}

/// Outcome map over the `(f0Q, f1Qp)` plane, one colour per attractor.
pub fn classification(csv: &str, png: &str) -> String {
    format!(
        "{PREAMBLE}{}\
set title 'Attractor reached from (1, 0, 0)'
set xlabel 'f_0 Q'
set ylabel \"f_1 Q'\"
set size ratio -1
set palette defined (0 'black', 1 'red', 2 'blue', 3 'green')
set cbrange [0:3]
unset colorbox
code(s) = s eq 'Red' ? 1 : s eq 'Blue' ? 2 : s eq 'Green' ? 3 : 0
plot '{csv}' using 3:4:(code(strcol(5))) with points pt 5 ps 0.6 lc palette notitle
",
        terminal(png, 800, 800)
    )
}

/// Equilibrium density of each population over the plane.
pub fn densities(csv: &str, png: &str) -> String {
    let mut s = format!(
        "{PREAMBLE}{}\
set multiplot layout 1,3
set xlabel 'f_0 Q'
set ylabel \"f_1 Q'\"
set size ratio -1
set palette rgbformulae 33,13,10
set cbrange [0:1]
",
        terminal(png, 1500, 520)
    );
    for (col, name) in [(6, "x_0"), (7, "x_1"), (8, "x_2")] {
        s.push_str(&format!("set title '{name}^*'\nplot '{csv}' using 3:4:{col} with points pt 5 ps 0.6 lc palette notitle\n"));
    }
    s.push_str("unset multiplot\n");
    s
}

/// `log10` of the time needed to come close to the attractor.
pub fn transients(csv: &str, png: &str) -> String {
    format!(
        "{PREAMBLE}{}\
set title 'log_{{10}} transient time'
set xlabel 'f_0 Q'
set ylabel \"f_1 Q'\"
set size ratio -1
set palette rgbformulae 22,13,-31
plot '{csv}' using 3:4:10 with points pt 5 ps 0.6 lc palette notitle
",
        terminal(png, 800, 800)
    )
}

fn abscissa(axis: Axis) -> (u32, &'static str) {
    // a section at fixed f0Q runs along f1Qp and vice versa
    match axis {
        Axis::F0Q => (4, "f_1 Q'"),
        Axis::F1Qp => (3, "f_0 Q"),
    }
}

/// Equilibrium densities along a section, with the rescaled transient time
/// `(log10 t - 2) / 2` dashed on top when the section carries times.
pub fn section(csv: &str, png: &str, axis: Axis, fixed: f64, with_time: bool) -> String {
    let (col, label) = abscissa(axis);
    let mut s = format!(
        "{PREAMBLE}{}\
set title '{} = {fixed}'
set xlabel \"{label}\"
set ylabel 'density'
set yrange [0:1]
plot '{csv}' using {col}:6 with lines lw 2 lc rgb 'red' title 'x_0', \\
     '' using {col}:7 with lines lw 2 lc rgb 'green' title 'x_1', \\
     '' using {col}:8 with lines lw 2 lc rgb 'blue' title 'x_2'",
        terminal(png, 900, 600),
        axis.as_str()
    );
    if with_time {
        s.push_str(&format!(", \\\n     '' using {col}:13 with lines dt 2 lw 2 lc rgb 'orange' title '(log_{{10}} t - 2)/2'"));
    }
    s.push('\n');
    s
}

/// Real parts of the tracked branch's eigenvalues along a section.
pub fn eigenvalues(csv: &str, png: &str, axis: Axis, fixed: f64) -> String {
    let (col, label) = abscissa(axis);
    format!(
        "{PREAMBLE}{}\
set title 'eigenvalues, {} = {fixed}'
set xlabel \"{label}\"
set ylabel 'Re {{/Symbol l}}'
set xzeroaxis
plot '{csv}' using {col}:15 with lines lw 2 title '{{/Symbol l}}_1', \\
     '' using {col}:16 with lines lw 2 title '{{/Symbol l}}_2', \\
     '' using {col}:17 with lines lw 2 title '{{/Symbol l}}_3'
",
        terminal(png, 900, 600),
        axis.as_str()
    )
}

/// Population trajectories over time.
pub fn orbit(csv: &str, png: &str, components: usize) -> String {
    let mut s = format!(
        "{PREAMBLE}{}\
set xlabel 't'
set ylabel 'density'
set yrange [0:1]
plot ",
        terminal(png, 900, 600)
    );
    let plots: Vec<String> = (2..=components + 1)
        .map(|c| if c == 2 { format!("'{csv}' using 1:{c} with lines lw 2") } else { format!("'' using 1:{c} with lines lw 2") })
        .collect();
    s.push_str(&plots.join(", \\\n     "));
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use qsdyn::output::{section_header, GRID_HEADER};

    #[test]
    fn section_columns_match_header() {
        let h = section_header(true);
        assert_eq!(h[3], "f1Qp");
        assert_eq!(h[5], "x0");
        assert_eq!(h[12], "rescaled_time");
        assert_eq!(h[14], "lambda1");
        assert_eq!(h[16], "lambda3");
        assert_eq!(GRID_HEADER[9], "log10_time");
    }

    #[test]
    fn scripts_reference_given_files() {
        let s = section("s.csv", "s.png", Axis::F0Q, 0.63, true);
        assert!(s.contains("'s.csv'") && s.contains("'s.png'") && s.contains("using 4:13"));
        assert!(orbit("o.csv", "o.png", 4).matches("with lines").count() == 4);
    }
}

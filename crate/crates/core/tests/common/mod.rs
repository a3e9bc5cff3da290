use semrob_core::{classify_bayes, BayesMode, Graph};

/// Smallest number of toggles at `v` (at most `max`) that changes the full
/// Bayes decision, found by enumerating subsets.
pub fn brute_force_flip(g: &Graph, v: usize, max: usize) -> Option<usize> {
    let clean = classify_bayes(g, v, BayesMode::Full).unwrap();
    let others: Vec<usize> = (0..g.n()).filter(|&u| u != v).collect();
    let mut work = g.clone();
    (1..=max).find(|&size| search(&mut work, v, &others, 0, size, clean))
}

fn toggle(g: &mut Graph, v: usize, u: usize) {
    if !g.remove_edge(v, u) {
        g.insert_edge(v, u);
    }
}

fn search(work: &mut Graph, v: usize, others: &[usize], start: usize, left: usize, clean: usize) -> bool {
    if left == 0 {
        return classify_bayes(work, v, BayesMode::Full).unwrap() != clean;
    }
    for i in start..others.len() {
        toggle(work, v, others[i]);
        let hit = search(work, v, others, i + 1, left - 1, clean);
        toggle(work, v, others[i]);
        if hit {
            return true;
        }
    }
    false
}

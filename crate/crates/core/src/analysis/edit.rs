/// Levenshtein distance with unit insertion, deletion and substitution costs.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Vec<String> {
        s.chars().map(String::from).collect()
    }

    #[test]
    fn examples() {
        assert_eq!(edit_distance(&p("kitten"), &p("kitten")), 0);
        assert_eq!(edit_distance(&[] as &[String], &p("abcd")), 4);
        assert_eq!(edit_distance(&p("abc"), &[] as &[String]), 3);
        assert_eq!(edit_distance(&p("kitten"), &p("sitting")), 3);
        assert_eq!(edit_distance(&["tag", "e"], &["tag"]), 1);
    }
}

use std::fmt::Write as _;

use ndarray::Array2;

/// `node_id<TAB>role_id` lines under a header.
pub fn roles_tsv(node_ids: &[u64], member_of: &[usize]) -> String {
    let mut out = String::from("node_id\trole_id\n");
    for (id, role) in node_ids.iter().zip(member_of) {
        writeln!(out, "{id}\t{role}").unwrap();
    }
    out
}

/// `node_id,dim_0,...` rows of an embedding matrix.
pub fn embeddings_csv(node_ids: &[u64], embedding: &Array2<f64>) -> String {
    let mut out = String::from("node_id");
    for d in 0..embedding.ncols() {
        write!(out, ",dim_{d}").unwrap();
    }
    out.push('\n');
    for (id, row) in node_ids.iter().zip(embedding.outer_iter()) {
        write!(out, "{id}").unwrap();
        for v in row {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn layouts() {
        assert_eq!(roles_tsv(&[5, 9], &[1, 0]), "node_id\trole_id\n5\t1\n9\t0\n");
        assert_eq!(
            embeddings_csv(&[3], &array![[0.5, -1.0]]),
            "node_id,dim_0,dim_1\n3,0.5,-1\n"
        );
    }
}

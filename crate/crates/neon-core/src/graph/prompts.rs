//! Prompt construction for the two extraction variants.
//!
//! Both prompts carry the chunk text with entity mentions re-wrapped in bare
//! `<e>...</e>` tags and ask for one interaction per line in the
//! `(YYYYMMDD, <sentence>)` tuple form. The renderings are frozen by golden
//! tests; do not reword casually.

use crate::corpus::Chunk;

use super::{EntityRef, GraphError};

pub fn build_prompt_m1(subject: &EntityRef, chunk: &Chunk) -> Result<String, GraphError> {
    if !chunk.entities.contains(&subject.id) {
        return Err(GraphError::SubjectNotInChunk {
            subject: subject.id.clone(),
        });
    }
    let date = chunk.date.compact();
    let mut prompt = String::new();
    prompt.push_str(&format!("Subject: {}\n\n", subject.name));
    prompt.push_str(&format!("News chunk dated {date}:\n"));
    for sentence in chunk.marked_sentences() {
        prompt.push_str(&sentence);
        prompt.push('\n');
    }
    prompt.push('\n');
    prompt.push_str(
        "Entity mentions in the chunk are highlighted with markup tags. List every \
         interaction, event, or activity between the subject and any highlighted entity \
         that the chunk directly reports. Write one interaction per line as a single \
         self-contained sentence that names the subject, in the form:\n",
    );
    prompt.push_str(&format!("({date}, <interaction sentence>)\n"));
    prompt.push_str(
        "Use only information stated in the chunk. If the chunk reports no interaction \
         involving the subject, return NONE.\n",
    );
    Ok(prompt)
}

pub fn build_prompt_m2(
    subject: &EntityRef,
    object: &EntityRef,
    batch: &[Chunk],
) -> Result<String, GraphError> {
    if batch.is_empty() {
        return Err(GraphError::PairNotInChunk {
            subject: subject.id.clone(),
            object: object.id.clone(),
        });
    }
    for chunk in batch {
        if !chunk.entities.contains(&subject.id) || !chunk.entities.contains(&object.id) {
            return Err(GraphError::PairNotInChunk {
                subject: subject.id.clone(),
                object: object.id.clone(),
            });
        }
    }
    let mut prompt = String::new();
    prompt.push_str(&format!("Subject: {}\n", subject.name));
    prompt.push_str(&format!("Object: {}\n\n", object.name));
    for chunk in batch {
        prompt.push_str(&format!("Chunk dated {}:\n", chunk.date.compact()));
        for sentence in chunk.marked_sentences() {
            prompt.push_str(&sentence);
            prompt.push('\n');
        }
        prompt.push('\n');
    }
    prompt.push_str(
        "Entity mentions in each chunk are highlighted with markup tags. List every \
         interaction, event, or activity between the subject and the object that these \
         chunks directly report. Write one interaction per line as a single \
         self-contained sentence that names both entities, prefixed with the date of \
         the chunk reporting it, in the form:\n",
    );
    prompt.push_str("(YYYYMMDD, <interaction sentence>)\n");
    prompt.push_str(
        "Use only information stated in the chunks. Return an empty list if no \
         interaction between the subject and the object is confidently detected.\n",
    );
    Ok(prompt)
}

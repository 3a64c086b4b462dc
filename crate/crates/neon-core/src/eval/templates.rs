//! Judge prompt templates, one per attribute.
//!
//! Each template carries `{question}`, `{response}`, `{passages}`, and
//! `{in-context examples}` slots. Zero-shot rendering drops the Examples
//! section; few-shot rendering splices the configured examples into it.
//! The rendered prompts are frozen by golden tests.

pub const HELPFULNESS: &str = "\
## Task Description
You are presented with a user query and an AI assistant's response. The query is focused on a specific entity, pertains to the news domain, and is date-stamped. Your task is to evaluate the AI assistant's response for its usefulness, using a 3-point Likert scale. The criteria for rating are detailed below.
## Helpfulness Criterion
Rating 2: The response is very helpful and provides the information expected for the user query. It includes mentions of additional named entities (such as people, locations, events, etc.) beyond the primary entity in the query and aligns completely with user's intent.
Rating 1: The response is somewhat helpful but fails to fully provide the information expected for the user's query. It can nevertheless serve to continue the conversation with the user or provides pointers to where the information can be found.
Rating 0: The response is not helpful and provides no information for the query.
## Output format
The output should be the following JSON format: {\"rating\": <numerical_rating>, \"reason\": <short_reasoning>}, mentioning the numerical rating, as well as a short and concise reasoning for the helpfulness rating.
## Examples
{in-context examples}
## Input to be rated
User query: {question}
AI assistant's response: {response}
";

pub const RELEVANCE: &str = "\
## Task Description
You are presented with a user query and an AI assistant's response. The query is focused on a specific entity, pertains to the news domain, and is date-stamped. Your task is to evaluate the AI assistant's response for its relevance, using a 3-point Likert scale. The criteria for rating are detailed below.
## Relevance Criterion
Rating 2: The response is completely relevant with accurate details and provides the information for the query date.
Rating 1: The response contains a mix of relevant and irrelevant details. The response contains some relevant information upto the specified date, and is more or less aligned with the user's intent.
Rating 0: The response is incorrect and provides no information for the query date.
## Output format
The output should be the following JSON format: {\"rating\": <numerical_rating>, \"reason\": <short_reasoning>}, mentioning the numerical rating, as well as a short and concise reasoning for the helpfulness rating.
## Examples
{in-context examples}
## Input to be rated
User query: {question}
AI assistant's response: {response}
";

pub const FAITHFULNESS: &str = "\
## Task Description
You are presented with a user query and an AI assistant's response. The query is focused on a specific entity, pertains to the news domain, and is date-stamped. Your task is to evaluate the AI assistant's response for its reliability, using a 3-point Likert scale. The criteria for rating are detailed below.
## Faithfulness Criterion
Rating 2: The response is perfectly reliable and grounded based on the supporting passages given below. All the information from the supporting passages is used in the response to answer the user query.
Rating 1: The response partially uses the supporting passages given below but has additional information which may be incorrect or unreliable.
Rating 0: The response is completely unreliable and does not depend on the supporting passages.
## Output format
The output should be the following JSON format: {\"rating\": <numerical_rating>, \"reason\": <short_reasoning>}, mentioning the numerical rating, as well as a short and concise reasoning for the helpfulness rating.
## Examples
{in-context examples}
## Input to be rated
User query: {question}
Supporting passages: {passages}
AI assistant's response: {response}
";

#pragma once

// Prompt templates, verbatim. Placeholders are substituted textually.

#include <string_view>

namespace hstream::prompts {

inline constexpr std::string_view kGoalTemplate = R"PROMPT(I am planning to add annotations to a video. The annotations form a three-level hierarchy: goal, steps, and substeps. Here are the specific requirements:
1. Goal Annotation: There is only one goal annotation for the entire video.
2. Step Annotations: Each step annotation is ordered chronologically and must follow the completion of all substeps within the previous step. For example, Step 2 cannot begin until all substeps of Step 1 are completed.
3. Substep Annotations: These are specific parts of the video that detail the actions within each step.

Given an image sequence extracted from a video, predict the most appropriate goal for the video based on the frames from each step and the short form responses for each step. 
The short form responses of the steps are provided as a time-ordered list in text format, where the 0th index is the earliest step and higher indices represent more recent steps. 
Utilize this context to predict the overall goal of the video.

Generate a response:
The response should consist of a single sentence that succinctly describes the goal.
Use the following list of short form responses for each step (in text format and time-ordered):
Short form response of step: {short_form_step}

Output format must be:
Answer: (goal))PROMPT";

inline constexpr std::string_view kStepTemplate = R"PROMPT(I am planning to add annotations to a video. The annotations form a three-level hierarchy: goal, steps, and substeps. Here are the specific requirements:
1. Goal Annotation: There is only one goal annotation for the entire video.
2. Step Annotations: Each step annotation is ordered chronologically and must follow the completion of all substeps within the previous step. For example, Step 2 cannot begin until all substeps of Step 1 are completed.
3. Substep Annotations: These are specific parts of the video that detail the actions within each step.

Given an image sequence extracted from a video clip, predict the most appropriate step occurring in the clip based on the sequence and the previous steps. 
The previous steps are provided as a time-ordered list of long form responses in text format, where the 0th index is the earliest step and higher indices represent more recent steps.
If there are no previous steps, the list will be empty. If there are more than 10 previous steps, only the 10 most recent responses will be provided. Utilize this context to improve the prediction for the current step.

First, Generate two types of responses:
Short form response: A single sentence that succinctly describes the step.
Long form response: A detailed and accurate description of the step based on the image sequence, considering the previous steps if provided.

After generating the responses, revise the long form response to ensure it aligns with the short form response for consistency.

Use the following list of previous long form responses in text format to ensure continuity and logical progression (the list may be empty if there are no prior steps, and a maximum of the 10 most recent responses will be provided):
Previous long form response: {prediction_list}

Output format must be:
Answer:
short form response: (response)
long form response (before revision): (response)
long form response (after revision): (response))PROMPT";

inline constexpr std::string_view kSubstepTemplate = R"PROMPT(I am planning to add annotations to a video. The annotations form a three-level hierarchy: goal, steps, and substeps. Here are the specific requirements:
1. Goal Annotation: There is only one goal annotation for the entire video.
2. Step Annotations: Each step annotation is ordered chronologically and must follow the completion of all substeps within the previous step. For example, Step 2 cannot begin until all substeps of Step 1 are completed.
3. Substep Annotations: These are specific parts of the video that detail the actions within each step.

Given an image sequence extracted from a video clip, predict the most appropriate substep occurring in the clip based on the sequence and the previous substeps of the current step. 
The previous substeps are provided as a time-ordered list of long form responses in text format, where the 0th index is the earliest substep and higher indices represent more recent substeps.
If there are no previous substeps, the list will be empty. Utilize this context to improve the prediction for the current substep.

First, Generate two types of responses:
Short form response: A single sentence that succinctly describes the substep.
Long form response: A detailed and accurate description of the substep based on the image sequence, considering the previous substeps if provided.

After generating the responses, revise the long form response to ensure it aligns with the short form response for consistency.

Use the following list of previous long form responses in text format to ensure continuity and logical progression (the list may be empty if there are no prior substeps):
Previous long form response: {prediction_list}

Output format must be:
Answer:
short form response: (response)
long form response (before revision): (response)
long form response (after revision): (response))PROMPT";

inline constexpr std::string_view kJudgeCISystem = R"PROMPT(You are an intelligent chatbot designed for evaluating the factual accuracy of generative outputs for video-based question-answer pairs. 
Your task is to compare the predicted answer with the correct answer and determine if they are factually consistent. Here's how you can accomplish the task:
------
##INSTRUCTIONS: 
- Focus on the factual consistency between the predicted answer and the correct answer. The predicted answer should not contain any misinterpretations or misinformation.
- The predicted answer must be factually accurate and align with the video content.
- Consider synonyms or paraphrases as valid matches.
- Evaluate the factual accuracy of the prediction compared to the answer.)PROMPT";

inline constexpr std::string_view kJudgeCIUser = R"PROMPT(Please evaluate the following video-based question-answer pair:"
Question: {question}
Correct Answer: {answer}
Predicted Answer: {pred}
Provide your evaluation only as a factual accuracy score where the factual accuracy score is an integer value between 0 and 5, with 5 indicating the highest level of factual consistency. 
Please generate the response in the form of a Python dictionary string with keys 'score', where its value is the factual accuracy score in INTEGER, not STRING.
DO NOT PROVIDE ANY OTHER OUTPUT TEXT OR EXPLANATION. Only provide the Python dictionary string. 
For example, your response should look like this: {''score': 4.8}.)PROMPT";

inline constexpr std::string_view kJudgeDOSystem = R"PROMPT(You are an intelligent chatbot designed for evaluating the detail orientation of generative outputs for video-based question-answer pairs. 
Your task is to compare the predicted answer with the correct answer and determine its level of detail, considering both completeness and specificity. Here's how you can accomplish the task:
------
##INSTRUCTIONS: 
- Check if the predicted answer covers all major points from the video. The response should not leave out any key aspects.
- Evaluate whether the predicted answer includes specific details rather than just generic points. It should provide comprehensive information that is tied to specific elements of the video.
- Consider synonyms or paraphrases as valid matches.
- Provide a single evaluation score that reflects the level of detail orientation of the prediction, considering both completeness and specificity.)PROMPT";

inline constexpr std::string_view kJudgeDOUser = R"PROMPT(Please evaluate the following video-based question-answer pair:
Question: {question}
Correct Answer: {answer}
Predicted Answer: {pred}
Provide your evaluation only as a detail orientation score where the detail orientation score is an integer value between 0 and 5, with 5 indicating the highest level of detail orientation. 
Please generate the response in the form of a Python dictionary string with keys 'score', where its value is the detail orientation score in INTEGER, not STRING.
DO NOT PROVIDE ANY OTHER OUTPUT TEXT OR EXPLANATION. Only provide the Python dictionary string. 
For example, your response should look like this: {''score': 4.8}.)PROMPT";

inline constexpr std::string_view kJudgeCUSystem = R"PROMPT(You are an intelligent chatbot designed for evaluating the contextual understanding of generative outputs for video-based question-answer pairs. 
Your task is to compare the predicted answer with the correct answer and determine if the generated response aligns with the overall context of the video content. Here's how you can accomplish the task:
------
##INSTRUCTIONS: 
- Evaluate whether the predicted answer aligns with the overall context of the video content. It should not provide information that is out of context or misaligned.
- The predicted answer must capture the main themes and sentiments of the video.
- Consider synonyms or paraphrases as valid matches.
- Provide your evaluation of the contextual understanding of the prediction compared to the answer.)PROMPT";

inline constexpr std::string_view kJudgeCUUser = R"PROMPT(Please evaluate the following video-based question-answer pair:
Question: {question}
Correct Answer: {answer}
Predicted Answer: {pred}
Provide your evaluation only as a contextual understanding score where the contextual understanding score is an integer value between 0 and 5, with 5 indicating the highest level of contextual understanding. 
Please generate the response in the form of a Python dictionary string with keys 'score', where its value is contextual understanding score in INTEGER, not STRING.
DO NOT PROVIDE ANY OTHER OUTPUT TEXT OR EXPLANATION. Only provide the Python dictionary string. 
For example, your response should look like this: {''score': 4.8}.)PROMPT";

inline constexpr std::string_view kJudgeTUSystem = R"PROMPT(You are an intelligent chatbot designed for evaluating the temporal understanding of generative outputs for video-based question-answer pairs. 
Your task is to compare the predicted answer with the correct answer and determine if they correctly reflect the temporal sequence of events in the video content. Here's how you can accomplish the task:
------
##INSTRUCTIONS: 
- Focus on the temporal consistency between the predicted answer and the correct answer. The predicted answer should correctly reflect the sequence of events or details as they are presented in the video content.
- Consider synonyms or paraphrases as valid matches, but only if the temporal order is maintained.
- Evaluate the temporal accuracy of the prediction compared to the answer.)PROMPT";

inline constexpr std::string_view kJudgeTUUser = R"PROMPT(Please evaluate the following video-based question-answer pair:
Question: {question}
Correct Answer: {answer}
Predicted Answer: {pred}
Provide your evaluation only as a temporal accuracy score where the temporal accuracy score is an integer value between 0 and 5, with 5 indicating the highest level of temporal consistency. 
Please generate the response in the form of a Python dictionary string with keys 'score', where its value is the temporal accuracy score in INTEGER, not STRING.
DO NOT PROVIDE ANY OTHER OUTPUT TEXT OR EXPLANATION. Only provide the Python dictionary string. 
For example, your response should look like this: {''score': 4.8}.)PROMPT";

}  // namespace hstream::prompts

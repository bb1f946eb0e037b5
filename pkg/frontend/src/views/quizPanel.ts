// Quiz panel: walks the quiz definition with a -2..+2 Likert scale per
// question. Answers are buffered client-side and submitted atomically on
// completion, so abandoning the quiz writes nothing. The badge shown
// afterwards is whatever the node minted; the panel never scores locally.

import { ApiClient, QuizDefinition } from "../types.js";
import { el, errorBox, withPending } from "../ui.js";

const LIKERT = [-2, -1, 0, 1, 2];

export async function renderQuizPanel(api: ApiClient): Promise<HTMLElement> {
  const root = el("section", { class: "quiz-panel" });
  let quiz: QuizDefinition;
  try {
    quiz = await api.quiz();
  } catch (err) {
    root.append(errorBox(`Could not load quiz: ${(err as Error).message}`));
    return root;
  }

  const answers = new Map<string, number>();
  const submit = el("button", { class: "submit-quiz", disabled: "true" }, [
    "Submit answers",
  ]) as HTMLButtonElement;

  const updateSubmit = () => {
    submit.disabled = answers.size !== quiz.questions.length;
  };

  root.append(el("h2", {}, ["Personality quiz"]));
  for (const q of quiz.questions) {
    const scale = el("div", { class: "likert", role: "radiogroup" });
    for (const value of LIKERT) {
      const id = `${q.question_id}-${value}`;
      const radio = el("input", {
        type: "radio",
        name: q.question_id,
        id,
        value: String(value),
      }) as HTMLInputElement;
      radio.addEventListener("change", () => {
        answers.set(q.question_id, value);
        updateSubmit();
      });
      scale.append(radio, el("label", { for: id }, [String(value)]));
    }
    root.append(
      el("div", { class: "question", "data-question": q.question_id }, [
        el("p", {}, [q.text]),
        scale,
      ]),
    );
  }

  submit.addEventListener("click", () => {
    void withPending(submit, async () => {
      const payload = Object.fromEntries(answers);
      const result = await api.submitQuizAnswers(payload);
      const outcome = el("div", { class: "quiz-outcome" });
      if (result.badge) {
        outcome.append(
          el("div", { class: "badge-card fresh" }, [
            el("div", { class: "trait-code" }, [result.badge.trait_code]),
            el("div", { class: "badge-scores" }, [
              result.badge.axis_scores.join(", "),
            ]),
          ]),
        );
      } else {
        outcome.append(el("p", {}, [`Recorded ${result.recorded.length} answers.`]));
      }
      root.replaceChildren(el("h2", {}, ["Personality quiz"]), outcome);
    }).catch((err) => root.append(errorBox((err as Error).message)));
  });

  root.append(submit);
  return root;
}

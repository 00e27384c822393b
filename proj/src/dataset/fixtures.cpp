#include "rimr/dataset/pipeline.h"
#include "rimr/reasoning_format.h"

namespace rimr::dataset {

namespace {

SourceSession session(std::string id, Topic topic, std::vector<std::string> lines) {
  SourceSession s{std::move(id), topic, {}};
  lines.insert(lines.begin(), std::string(kCounselorOpener));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    s.turns.push_back({i % 2 == 0 ? Speaker::kCounselor : Speaker::kClient, std::move(lines[i]), static_cast<int>(i)});
  }
  return s;
}

}  // namespace

// Client lines plant profile-lexicon keywords for every required factor; one
// counselor line per triggered session carries the trigger phrasing. Neutral
// counselor lines avoid every trigger phrase.
std::vector<SourceSession> make_fixture_sessions() {
  std::vector<SourceSession> out;

  out.push_back(session("fx-01", Topic::kAcademicCareer,
                        {"Work stress is eating me alive. I think it is burnout.",
                         "When did this start?",
                         "After the job promotion last spring. I have a high need for control, so I check everything.",
                         "I think you should delegate more; my advice is to set a hard stop each evening.",
                         "Maybe. Overworking is just how I get through the week.",
                         "Who do you talk to about this?",
                         "A supportive friend from college, sometimes.",
                         "What would a good week look like for you?",
                         "Leaving on time twice, I suppose."}));

  out.push_back(session("fx-02", Topic::kEmotion,
                        {"Low mood, mostly. Since the breakup nothing feels right.",
                         "That must have been painful. How do you feel when you think about it?",
                         "Empty. My sister says I have poor emotion regulation and maybe she is right.",
                         "Thank you for sharing that.",
                         "I grew up with critical parents, so I blame myself a lot.",
                         "When is it hardest?",
                         "At night. Regular exercise used to help.",
                         "What happened the last time you went for a run?",
                         "I slept better that night."}));

  out.push_back(session("fx-03", Topic::kPersonalGrowth,
                        {"My procrastination is out of control and I have lack of motivation.",
                         "When did you notice this?",
                         "Since moving to a new city. I had prior negative counseling experiences, to be honest.",
                         "This method works best if you trust the process, so I would like to give you a worksheet.",
                         "Fine. Rumination keeps me up anyway.",
                         "What keeps you going on the better days?",
                         "Music practice, mostly.",
                         "Thank you for telling me.",
                         "It helps to say it out loud."}));

  out.push_back(session("fx-04", Topic::kInterpersonal,
                        {"There is constant conflict with partner at home.",
                         "What happened most recently?",
                         "We argued again. I rely on habitual avoidance coping, I walk away.",
                         "What role did you play in the conflict, deep down?",
                         "I guess I stay in my room. Distraction through gaming, mostly.",
                         "How long has it been like this?",
                         "Since the layoff. My low self-esteem does not help.",
                         "Who else knows about this?",
                         "A supportive sibling."}));

  out.push_back(session("fx-05", Topic::kInterpersonal,
                        {"Social anxiety, I think. I freeze around coworkers.",
                         "When is it the worst?",
                         "With the new manager. Fear of rejection has followed me since school.",
                         "It sounds like there is more here. Can you say more?",
                         "I keep agreeing to everything. Over-adaptation to expectations, my friend called it.",
                         "What happens after you agree?",
                         "I feel drained and lonely. Loneliness is a big part of it.",
                         "What would you like to change first?",
                         "Saying no once."}));

  out.push_back(session("fx-06", Topic::kAcademicCareer,
                        {"Work stress and exhaustion. My team says I steamroll them.",
                         "What do they mean by that?",
                         "Interpersonal dominance, my manager wrote in my review. Perfectionism too.",
                         "Let's focus on your schedule today; you need to cut back.",
                         "I know my schedule better than anyone.",
                         "When did the pressure start?",
                         "After the job promotion.",
                         "What helps you unwind?",
                         "Time with daughter on weekends."}));

  out.push_back(session("fx-07", Topic::kEmotion,
                        {"Insomnia and panic attacks for months.",
                         "When did they start?",
                         "After some trauma exposure at work. I also have a mistrust of authority.",
                         "As your counselor, I want to try this exercise with you.",
                         "Okay. I just do social withdrawal when it gets bad.",
                         "What does that look like?",
                         "I stop answering messages. I have low self-esteem about it.",
                         "Who is still around when that happens?",
                         "My religious community checks on me."}));

  // No planted trigger.
  out.push_back(session("fx-08", Topic::kPersonalGrowth,
                        {"Loneliness mostly, since moving to a new city.",
                         "When do you notice it most?",
                         "Evenings. I have low self-esteem, so I rarely reach out. Rumination follows.",
                         "Thank you for sharing that.",
                         "Music practice keeps me sane.",
                         "What happened the last time you reached out to someone?",
                         "It went well, actually. I want to do it more."}));

  // Trigger phrasing without any matching high-risk profile feature.
  out.push_back(session("fx-09", Topic::kAcademicCareer,
                        {"Exam anxiety. I had a failed exam last term.",
                         "How has that affected your studying?",
                         "Perfectionism makes me redo everything, then rumination keeps me awake.",
                         "Maybe you should take a short walk after lunch.",
                         "I could try that. A supportive friend offered to join me.",
                         "When could you start?",
                         "Tomorrow, I would like to."}));

  out.push_back(session("fx-10", Topic::kEmotion,
                        {"Low mood after a relational loss? No, more like burnout from caring for everyone.",
                         "When did it begin?",
                         "After the layoff. Critical parents taught me to keep going. Overworking follows.",
                         "Who do you lean on?",
                         "Regular exercise and a supportive sibling.",
                         "What would a lighter week look like?",
                         "Fewer evening shifts. That makes sense to aim for."}));
  return out;
}

}  // namespace rimr::dataset
